# The MIT License (MIT)
# Copyright © 2025 SpikeRL

from setuptools import setup, find_packages

setup(
    name="spikerl",
    version="1.0.0",
    description="SpikeRL - spiking actor training with adaptive surrogate gradients for quadrotor control",
    author="SpikeRL",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.9",
    install_requires=[
        "setuptools>=70",
        "numpy>=1.24",
        "bittensor>=9.11,<10",
        "pyyaml>=6.0",
    ],
    extras_require={
        "test": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": [
            "spikerl=runner.runner:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
)
