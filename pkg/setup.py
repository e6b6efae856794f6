from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fallback kernel is used at run time
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("invmaxstable._ckernel", ["src/invmaxstable/_ckernel.pyx"],
                   optional=True)],
        compiler_directives={"language_level": 3})

setup(ext_modules=ext_modules)
