# anchors pytest's rootdir so tests/oracles.py is importable from any cwd
