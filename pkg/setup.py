from setuptools import setup

setup(
    name="LyapBound",
    version="0.3.0",
    long_description="*LyapBound*: certified *Lyap*unov exponent *bound*s for expanding interval maps",
    long_description_content_type="text/markdown",
    packages=["lyapbound"],
    python_requires=">=3.11",
    install_requires=["scikit-learn==1.7", "scipy", "numpy", "pandas", "tqdm", "mpmath", "sympy"],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["lyapbound = lyapbound.cli:main"]},
)
