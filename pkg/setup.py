from setuptools import find_packages, setup

with open("requirements.txt", encoding="utf-8") as requirements:
    install_requires = [line.strip() for line in requirements if line.strip() and not line.startswith("#")]

setup(
    name="squirm",
    version="0.1.0",
    description="Finite element simulation of tangential squirmers",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"squirm": ["config/*.yaml", "verification/data/*.csv"]},
    install_requires=install_requires,
    python_requires=">=3.8",
    entry_points={"console_scripts": ["squirm=squirm.main:main"]},
)
