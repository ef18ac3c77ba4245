from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; qrobonet.kernels falls back
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("qrobonet._kernels", ["src/qrobonet/_kernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
