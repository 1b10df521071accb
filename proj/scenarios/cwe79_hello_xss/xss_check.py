#!/usr/bin/env python3
"""Toy XSS checker: flags handlers that interpolate request input into
markup without going through an escape call. Emits a SARIF subset on
stdout."""
import json
import re
import sys


def main():
    path = sys.argv[1]
    with open(path) as fh:
        lines = fh.readlines()
    results = []
    for i, line in enumerate(lines, start=1):
        if "<p>" not in line and "<P>" not in line:
            continue
        if re.search(r"escape\s*\(", line):
            continue
        if re.search(r'["\']</?p>["\']\s*[+%]|[+%]\s*["\']</?p>', line) or (
            "+" in line or "%" in line
        ):
            results.append(
                {
                    "ruleId": "Reflected server-side cross-site scripting",
                    "message": {
                        "text": "Cross-site scripting vulnerability due to a"
                        " user-provided value"
                    },
                    "locations": [
                        {
                            "physicalLocation": {
                                "artifactLocation": {"uri": path},
                                "region": {"startLine": i, "endLine": i},
                            }
                        }
                    ],
                }
            )
    print(json.dumps({"version": "2.1.0", "runs": [{"results": results}]}))


if __name__ == "__main__":
    main()
