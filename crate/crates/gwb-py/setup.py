"""Builds the gwb_py extension module by delegating to cargo.

The extension is a PyO3 cdylib; setuptools only needs to know where the
compiled artifact should land, so a small custom build_ext command runs
`cargo build` and copies the shared library into place.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

HERE = Path(__file__).resolve().parent


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "gwb-py"],
            cwd=HERE,
            check=True,
        )
        if sys.platform == "darwin":
            libname = "libgwb_py.dylib"
        elif sys.platform == "win32":
            libname = "gwb_py.dll"
        else:
            libname = "libgwb_py.so"
        # The workspace root owns the target directory.
        artifact = HERE.parent.parent / "target" / "release" / libname
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(artifact, dest)


setup(
    ext_modules=[Extension("gwb_py", sources=[])],
    cmdclass={"build_ext": CargoBuildExt},
)
