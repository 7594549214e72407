from setuptools import find_packages, setup


def read_requirements():
    with open("requirements.txt") as f:
        return [
            line.strip()
            for line in f
            if line.strip() and not line.startswith("#") and line.strip() != "pytest"
        ]


if __name__ == "__main__":
    setup(
        name="multitgdr",
        version="1.0.0",
        description="Threshold gradient descent classifiers for multi-class and multi-study expression data",
        packages=find_packages(include=["multitgdr", "multitgdr.*"]),
        python_requires=">=3.9",
        install_requires=read_requirements(),
        extras_require={"test": ["pytest"]},
        entry_points={"console_scripts": ["multitgdr = multitgdr.cli:main"]},
    )
