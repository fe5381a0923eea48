from setuptools import setup, find_packages

setup(
    name="siclab",
    version="0.1.0",
    description="A package for verifying, searching and classifying SIC-POVM fiducial vectors",
    author="Jing Ding",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "sympy",
        "pyyaml",
    ],
    extras_require={
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "siclab=siclab.interface.cli:main",
        ],
    },
    python_requires=">=3.9",
)
