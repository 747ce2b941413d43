from cx_Freeze import setup, Executable
import os

from autooia.version import TITLE, DESCRIPTION, VERSION_TEXT


build_exe_options = {
    "packages": ["os", "sys", "sqlite3", "numpy", "rich", "cryptography", "autooia"],
    "excludes": ["tkinter", "PyQt5"],
    "optimize": 2
}

base = None
current_directory = os.getcwd()
icon_path = os.path.join(current_directory, "favicon.ico")

executables = [
    Executable(
        "oia.py",
        base=base,
        target_name="autooia",
        icon=icon_path if os.path.isfile(icon_path) else None
    )
]


setup(
    name=TITLE,
    version=VERSION_TEXT.split("-")[0],
    description=DESCRIPTION,
    options={"build_exe": build_exe_options},
    executables=executables
)
