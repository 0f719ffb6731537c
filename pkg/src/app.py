import os
import tempfile

import numpy as np
import streamlit as st
from dotenv import load_dotenv

from oceandc.bands import BandId
from oceandc.classify import class_histogram, classify, scheme_for
from oceandc.errors import OceanDCError
from oceandc.netcdf_io import read_netcdf

# Load environment variables
load_dotenv()

SCHEME_INDICES = [BandId.NDWI, BandId.WRI_2, BandId.OSI]

# 🎨 Streamlit UI Setup
st.set_page_config(
    page_title="Ocean Data Cube",
    page_icon="🌊",
    layout="wide",
    initial_sidebar_state="expanded"
)

# 🌍 Header
st.markdown("<h1 style='text-align: center;'>🌊 Ocean Data Cube Inspector</h1>", unsafe_allow_html=True)
st.markdown("<p style='text-align: center;'>Harmonized Landsat-8/9 and Sentinel-2 hypercubes.</p>",
            unsafe_allow_html=True)


@st.cache_data
def load_cube(path: str, mtime: float):
    """Read a cube once per file version."""
    return read_netcdf(path)


def availability_table(cube) -> dict:
    """Fill percentage per band (rows) and slice (columns)."""
    fill = np.round(cube.fill_fractions() * 100.0, 1)
    table = {"band": [f"{int(b):>2} {b.label}" for b in BandId]}
    for i, moment in enumerate(cube.times):
        table[f"t{i} {moment:%Y-%m-%d}"] = fill[i].tolist()
    return table


# Sidebar
with st.sidebar:
    st.title("📄 Cube File")
    default_path = os.getenv("OCEANDC_CUBE", "")
    cube_path = st.text_input("Path to a cube (.nc)", value=default_path)
    uploaded_file = st.file_uploader("…or upload one", type=["nc"])

    st.markdown("### 🛠️ Tech Stack")
    st.markdown("""
    - 🛰️ **Sensors**: Landsat-8/9, Sentinel-2
    - 🧮 **Arrays**: numpy
    - 💾 **Storage**: NetCDF classic (CDF-2), CF-1.8
    """)

if uploaded_file:
    with tempfile.NamedTemporaryFile(suffix=".nc", delete=False) as tmp:
        tmp.write(uploaded_file.getvalue())
        cube_path = tmp.name

if not cube_path:
    st.info("Choose a cube file in the sidebar to start.")
    st.stop()

try:
    cube = load_cube(cube_path, os.path.getmtime(cube_path))
except (OceanDCError, OSError) as e:
    st.error(f"❌ Error reading cube: {str(e)}")
    st.stop()

t, _, h, w = cube.shape
col1, col2, col3 = st.columns(3)
col1.metric("Time slices", t)
col2.metric("Grid", f"{w} × {h}")
col3.metric("CRS", f"EPSG:{cube.grid.epsg}")

st.subheader("🕒 Slices")
st.table({
    "time": [m.isoformat() for m in cube.times],
    "sensor": [s.value for s in cube.sensors],
    "scene": list(cube.scene_ids),
})

st.subheader("📊 Band availability (fill %)")
st.dataframe(availability_table(cube), use_container_width=True)

st.subheader("🗂️ Class counts")
index = st.selectbox("Index", SCHEME_INDICES, format_func=lambda band: band.label)
slice_index = int(st.number_input("Time slice", min_value=0, max_value=t - 1, value=0, step=1))

with st.spinner("🔍 Classifying..."):
    scheme = scheme_for(index, cube.sensors[slice_index])
    codes = classify(cube.plane(slice_index, index), scheme, index)
    histogram = class_histogram(codes, scheme)

if sum(histogram.values()) == 0:
    st.warning(f"⚠️ {index.label} is all fill in slice {slice_index}.")
else:
    st.success(f"✅ {scheme.name}: {sum(histogram.values())} valid pixel(s)")
st.table({"class": list(histogram), "pixels": list(histogram.values())})
