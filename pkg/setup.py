from setuptools import setup, find_packages

setup(
    name="isoclock",
    version="1.0.0",
    packages=find_packages(exclude=['tests', 'tests.*']),
    install_requires=[
        'numpy>=1.26.0',
        'scipy>=1.11.0',           # Root finding, least squares, statistics
        'SQLAlchemy>=2.0.0',       # Optional run ledger
        'psutil>=5.9.0',           # Performance monitor
        'python-dotenv>=1.0.0',    # .env support for configuration
    ],
    extras_require={
        'test': [
            'pytest>=8.0.0',
            'pytest-asyncio>=0.23.0',
            'pytest-cov>=4.1.0',
        ],
    },
    entry_points={
        'console_scripts': [
            'isoclock=src.cli.main:main',
        ],
    },
    package_data={
        'src.nuclear_data': ['data/*.dat'],
    },
    include_package_data=True,
    python_requires='>=3.10',
    author="CDSL Software Production",
    description="Transmutation yields and hyperfine-clock comparison simulations",
    long_description=open('DOC.md').read(),
    long_description_content_type="text/markdown",
)
