"""Build hook for the optional compiled projection kernels.

The t-SNE inner loops ship as a Cython extension. If the extension cannot
be built (no compiler, no Cython), installation still succeeds and the
package falls back to the pure-numpy kernels at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: compiled kernels skipped ({exc}); pure-python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); pure-python fallback will be used")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "promptmap.projection._kernels_c",
                ["src/promptmap/projection/_kernels_c.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
