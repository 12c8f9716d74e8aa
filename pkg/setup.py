from setuptools import find_packages, setup

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("pytest")]

setup(
    name="conjugacy-growth-lab",
    version="0.1.0",
    description="自由群与有限循环群自由积的共轭增长实验工具",
    packages=find_packages(exclude=("tests", "examples", "examples.*")),
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={"test": ["pytest==8.4.1"]},
    entry_points={"console_scripts": ["conjugacy-lab=lab.main:main"]},
)
