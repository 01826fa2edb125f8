import os
from setuptools import setup

def read(fname):
    with open(os.path.join(os.path.dirname(__file__), fname), "rb") as f:
        reqs = f.read().decode("utf-8")
    return reqs

packages = [
    "SpanJudge",
    "SpanJudge.common",
    "SpanJudge.evaluate",
    "SpanJudge.generate_data",
    "SpanJudge.ml",
    "SpanJudge.parsers",
    "SpanJudge.report",
    "SpanJudge.util"
]

setup(
    name = "SpanJudge",
    version = "0.0.1",
    author = "Eli Draizen",
    author_email = "edraizen@gmail.com",
    packages=packages,
    long_description=read('README.md'),
    long_description_content_type="text/markdown",
    install_requires=read("requirements.txt").splitlines(),
    extras_require={"test": ["pytest", "hypothesis"]},
    package_data={"SpanJudge.common": ["defaults.yaml"]},
    entry_points={"console_scripts": ["spanjudge=SpanJudge.main:main"]},
    python_requires=">=3.9",
    include_package_data=True,
    zip_safe=False
)
