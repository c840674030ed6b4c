#!/usr/bin/env python3
"""
Packaging for the WSTV denoising tools.
"""
from setuptools import setup

MODULES = [
    "wstv_core",
    "image_io",
    "image_synth",
    "metrics",
    "diff_ops",
    "weights",
    "patch_jacobian",
    "spectral",
    "solvers",
    "bench",
    "reporting",
    "config",
    "input_validation",
    "main",
]

setup(
    name="wstv-denoise",
    version="1.0.0",
    description="Weighted structure tensor total variation denoising with a fast dual solver",
    python_requires=">=3.8",
    py_modules=MODULES,
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.7",
        "scikit-image>=0.19",
    ],
    extras_require={
        "test": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": [
            "wstv=main:main",
        ],
    },
)
