from setuptools import setup, find_packages

setup(name='esdgpos',
      version='0.1.0',
      description='positivity-preserving entropy stable DG solver for compressible flow',
      author='esdgpos developers',
      license='MIT',
      packages=find_packages(exclude=['tests', 'examples*']),
      package_data={'esdgpos.scheme': ['data/*.txt']},
      python_requires='>=3.8',
      install_requires=[
          "numpy",
          "scipy",
          "datasets",
          "tqdm",
      ],
      extras_require={
          "test": ["pytest", "hypothesis"],
      },
      entry_points={
          "console_scripts": ["esdgpos=esdgpos.cli:main"],
      },
      )
