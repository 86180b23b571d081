#!/usr/bin/env python3
"""Test tool: generate an outline tree for the given source files.

Usage: outline_echo.py FILE...

Emits one root <node> per file, with a child node per line that looks
like a Python function definition.  Matches the outline XML contract
documented in docs/output-language.md.
"""
import os
import re
import sys

print("<eioutline>")
for path in sys.argv[1:]:
    name = os.path.basename(path)
    print(f'  <node name="{name}" kind="file" selectable="false">')
    try:
        with open(path, encoding="utf-8", errors="replace") as fh:
            for line in fh:
                m = re.match(r"\s*def\s+(\w+)", line)
                if m:
                    print(f'    <node name="{m.group(1)}" kind="method" selectable="true" />')
    except OSError:
        pass
    print("  </node>")
print("</eioutline>")
