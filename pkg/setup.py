from setuptools import setup

setup(
    name="surface-bp4",
    version="0.1.0",
    description="GF(4) belief-propagation decoders for surface codes",
    package_dir={'': 'scripts'},
    py_modules=[
        'gf2',
        'pauli',
        'codes',
        'noise',
        'decoder_config',
        'bp_core',
        'bp_variants',
        'evaluation',
        'trapping',
        'bp_cli',
    ],
    python_requires=">=3.8",
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.9',
        'galois>=0.3',
        'tqdm>=4.60',
    ],
    extras_require={
        'test': ['hypothesis>=6.0'],
    },
    entry_points={
        'console_scripts': ['bp4=bp_cli:main'],
    },
)
