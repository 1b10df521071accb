#!/usr/bin/env python3
"""Toy lint for the lock-register scenario: the register must be driven to
its locked state on reset. Emits a SARIF subset on stdout."""
import json
import re
import sys


def main():
    path = sys.argv[1]
    with open(path) as fh:
        lines = fh.readlines()
    has_reset_lock = any(
        re.search(r"!\s*resetn\s*\)\s*locked\s*<=\s*1", line)
        or re.search(r"!\s*resetn\s*\)\s*$", line.rstrip())
        for line in lines
    )
    if not has_reset_lock:
        src = "".join(lines)
        has_reset_lock = (
            re.search(r"!\s*resetn\s*\)[\s\n]*locked\s*<=\s*1", src)
            is not None
        )
    results = []
    if not has_reset_lock:
        hit = 1
        for i, line in enumerate(lines, start=1):
            if "locked" in line and "<=" in line:
                hit = i
                break
        results.append(
            {
                "ruleId": "Uninitialized Value on Reset for Registers Holding Security Settings",
                "message": {
                    "text": "registered locked should be set to 1 when resetn is 0"
                },
                "locations": [
                    {
                        "physicalLocation": {
                            "artifactLocation": {"uri": path},
                            "region": {"startLine": hit, "endLine": hit},
                        }
                    }
                ],
            }
        )
    print(json.dumps({"version": "2.1.0", "runs": [{"results": results}]}))


if __name__ == "__main__":
    main()
