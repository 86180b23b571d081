#!/usr/bin/env python3
"""Test tool: print the received argument vector as JSON, one token per entry."""
import json
import sys

print(json.dumps({"argv": sys.argv}))
