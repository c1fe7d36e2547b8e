import setuptools

VERSION = "0.3.0"
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()
with open("requirements.txt") as f:
    required = f.read().splitlines()

setuptools.setup(
    name="wigner-utils",
    version=VERSION,
    description="Wigner functionals of multimode bosonic states through exact Gaussian functional integrals",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests"]),
    package_data={"wigner_utils": ["py.typed", "scenarios/*.json"]},
    entry_points={"console_scripts": ["wigner-utils = wigner_utils.cli:main"]},
    keywords=["Wigner functional", "quantum optics", "phase space", "Moyal product"],
    classifiers=[
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Typing :: Typed",
        "License :: OSI Approved :: MIT License",
        "Topic :: Software Development :: Libraries",
        "Topic :: Scientific/Engineering :: Physics",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
    ],
    python_requires=">=3.8",
    install_requires=required,
)
