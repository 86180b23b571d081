#!/usr/bin/env python3
"""Test tool: drop a file into the download directory and announce it.

Usage: make_download.py DOWNLOAD_DIR EXECID FILENAME NBYTES

The file content is the deterministic byte pattern i % 256.
"""
import os
import sys

download_dir, execid, filename, nbytes = sys.argv[1], sys.argv[2], sys.argv[3], int(sys.argv[4])

path = os.path.join(download_dir, filename)
with open(path, "wb") as fh:
    fh.write(bytes(i % 256 for i in range(nbytes)))

print(f'<eiout><eicommands><download execid="{execid}" filename="{filename}" /></eicommands></eiout>')
