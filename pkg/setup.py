import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = [
    Extension(
        "spincomb._ckernels",
        ["src/spincomb/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        # limited-range complex arithmetic avoids the libgcc __muldc3 calls
        extra_compile_args=["-O3", "-fcx-limited-range"],
    )
]

setup(ext_modules=cythonize(ext_modules, compiler_directives={"language_level": "3"}))
