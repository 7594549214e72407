import os

from setuptools import find_packages

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def test_every_subpackage_is_installed():
    packages = set(find_packages(ROOT, include=["multitgdr", "multitgdr.*"]))
    source = {
        os.path.relpath(directory, ROOT).replace(os.sep, ".")
        for directory, _, files in os.walk(os.path.join(ROOT, "multitgdr"))
        if any(name.endswith(".py") for name in files) and "__pycache__" not in directory
    }
    assert source <= packages
    assert "multitgdr.controllers" in packages


def test_requirements_name_only_imported_packages():
    with open(os.path.join(ROOT, "requirements.txt")) as f:
        names = {line.strip().lower() for line in f if line.strip()}
    assert not names & {"annotated-types", "pydantic_core", "typing_extensions"}
