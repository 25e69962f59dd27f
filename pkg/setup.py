from setuptools import setup, find_packages

setup(
    name="ontonorm",
    version="1.0.0",
    description="Phenotype term normalization to HPO concepts with retrieval-augmented LLMs",
    packages=find_packages(exclude=["fixtures", "fixtures.*"]),
    package_data={"ontonorm": ["prompts/*.txt"]},
    install_requires=[
        "pydantic==2.8.2",
        "pydantic-settings==2.3.4",
        "python-dotenv==1.0.1",
        "httpx==0.27.0",
        "numpy==1.26.4",
        "tenacity==8.5.0",
        "tomli==2.0.1; python_version < '3.11'",
    ],
    extras_require={"test": ["pytest==8.3.2"]},
    entry_points={"console_scripts": ["ontonorm=ontonorm.cli.main:main"]},
    python_requires=">=3.10",
)
