import setuptools

with open('readme.md') as fh:
    long_description = fh.read()

setuptools.setup(
    name='crowdgen',
    version='0.1.0',
    description='Crowd simulation benchmark for scenario generalization of imitation-learned steering policies',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=setuptools.find_packages('.', exclude=('tests', 'tests.*', 'examples', 'examples.*')),
    install_requires=[
        'numpy>=1.21',
        'scipy>=1.7',
        'torch>=1.13',
        'pandas>=1.5',
        'matplotlib>=3.6',
        'tqdm>=4.60',
    ],
    extras_require={'test': ['pytest>=7']},
    entry_points={'console_scripts': ['crowdgen=crowdgen.harness.cli:main']},
    classifiers=[
        'Programming Language :: Python :: 3',
        'Operating System :: OS Independent'
    ],
    python_requires='>=3.8'
)
