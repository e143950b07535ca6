# Copyright 2026 The adaptok Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Builds a scientific and a general text corpus from installed Python sources.

Scientific: docstrings and comments of numerical/statistics packages.
General: docstrings and comments of the standard library and web/CLI/data
tooling packages. Both are plain prose-ish text, one paragraph per line.

    python3 tools/qualitative_corpora.py --out DIR [--min-mb 5] [--max-mb 8]
"""

import argparse
import ast
import importlib.util
import io
import os
import sys
import sysconfig
import tokenize

SCIENTIFIC = ["scipy", "sympy", "statsmodels", "sklearn", "numpy", "networkx", "skimage", "mpmath", "astropy",
              "pandas"]
GENERAL = ["stdlib", "requests", "jinja2", "sqlalchemy", "fastapi", "pydantic", "rich", "click", "httpx",
           "uvicorn", "starlette", "yaml", "setuptools", "pip", "IPython", "tornado", "streamlit", "marimo",
           "cryptography", "attr", "filelock", "fsspec", "loguru", "tqdm", "jsonschema", "anyio", "urllib3",
           "pygments", "docutils", "markdown_it", "babel", "werkzeug", "flask", "botocore", "boto3"]


def package_dir(name):
    if name == "stdlib":
        return sysconfig.get_paths()["stdlib"]
    try:
        spec = importlib.util.find_spec(name)
    except (ImportError, ValueError):
        return None
    if spec is None or not spec.submodule_search_locations:
        return None
    return list(spec.submodule_search_locations)[0]


def prose_of(source):
    out = []
    try:
        tree = ast.parse(source)
    except (SyntaxError, ValueError):
        return out
    for node in ast.walk(tree):
        if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
            doc = ast.get_docstring(node, clean=True)
            if doc:
                out.extend(p.replace("\n", " ") for p in doc.split("\n\n"))
    try:
        for tok in tokenize.generate_tokens(io.StringIO(source).readline):
            if tok.type == tokenize.COMMENT:
                text = tok.string.lstrip("#").strip()
                if len(text.split()) >= 3:
                    out.append(text)
    except (tokenize.TokenError, IndentationError, SyntaxError):
        pass
    return out


def collect(names, path, max_bytes, skip_dirs=()):
    seen = set()
    size = 0
    with open(path, "w", encoding="utf-8") as fh:
        for name in names:
            root = package_dir(name)
            if not root:
                continue
            for dirpath, dirnames, filenames in os.walk(root):
                dirnames[:] = sorted(d for d in dirnames if d not in skip_dirs and d != "tests" and d != "test")
                for f in sorted(filenames):
                    if not f.endswith(".py"):
                        continue
                    try:
                        with open(os.path.join(dirpath, f), encoding="utf-8") as src:
                            text = src.read()
                    except (UnicodeDecodeError, OSError):
                        continue
                    for para in prose_of(text):
                        para = " ".join(para.split())
                        if len(para) < 20 or para in seen:
                            continue
                        seen.add(para)
                        fh.write(para + "\n")
                        size += len(para.encode("utf-8")) + 1
                        if size >= max_bytes:
                            return size
    return size


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--min-mb", type=float, default=5.0)
    ap.add_argument("--max-mb", type=float, default=8.0)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    limit = args.max_mb * 1e6
    sci = collect(SCIENTIFIC, os.path.join(args.out, "scientific.txt"), limit)
    gen = collect(GENERAL, os.path.join(args.out, "general.txt"), limit, skip_dirs=("site-packages", "dist-packages"))
    print(f"scientific.txt {sci / 1e6:.1f} MB, general.txt {gen / 1e6:.1f} MB")
    if min(sci, gen) < args.min_mb * 1e6:
        print(f"corpora smaller than {args.min_mb} MB", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
