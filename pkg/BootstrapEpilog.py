"""Installs CztHeartRate and its development dependencies into the bootstrapped environment."""

import subprocess
import sys


# First arg is the script name, second arg is the name of the shell script to write to
extras = ["dev"]
pip_flags = ["--disable-pip-version-check"]

for arg in sys.argv[2:]:
    if arg == "--package":
        extras.append("package")
    elif arg == "--no-cache":
        pip_flags.append("--no-cache-dir")
    else:
        sys.stderr.write("WARNING: '{}' is not a recognized argument.\n".format(arg))

subprocess.run(
    'pip install {} --editable ".[{}]"'.format(" ".join(pip_flags), ", ".join(extras)),
    check=True,
    shell=True,
)
