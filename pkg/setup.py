from setuptools import setup, find_packages

setup(
    name="hdvikit",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    description="Solvers and diagnostics for history-dependent contact variational inequalities",
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.9',
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "typer>=0.9",
        "tqdm>=4.66",
        "tabulate>=0.9",
    ],
    entry_points={
        'console_scripts': [
            'hdvikit_cli=hdvikit.hdvikit_cli:app',
        ],
    },
)
