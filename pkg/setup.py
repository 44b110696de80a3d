"""Build script for the optional compiled classification core.

The extension accelerates the per-document tokenize/score loop and releases
the GIL while running, which is what lets thread workers scale on multi-core
hosts. Installation falls back to the pure-Python engine when the extension
cannot be built; set EMTK_SKIP_EXTENSION=1 to skip the build explicitly.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("EMTK_SKIP_EXTENSION"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "emtk._kernel._speed",
                ["src/emtk/_kernel/_speed.pyx"],
                # No -ffast-math: the compiled scores must stay IEEE-comparable
                # with the pure-Python engine.
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
