from setuptools import setup, find_packages

setup(
    name="oceandc",
    version="0.1",
    package_dir={"": "src"},
    packages=find_packages("src"),
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "pydantic>=2",
        "python-dotenv",
        "streamlit"
    ],
    extras_require={
        "xarray": ["xarray"],
        "test": ["pytest", "pyproj", "tifffile", "scipy", "xarray"]
    },
    entry_points={
        "console_scripts": ["oceandc = oceandc.cli:main"]
    }
)
