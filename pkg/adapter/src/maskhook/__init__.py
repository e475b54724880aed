"""Hook adapter: replays mask-set interchange files as activation
replacements inside a vision-language OCR model."""

from .interchange import read_records, write_records
from .manifest import AdapterManifest, HookBinding, load_manifest
from .runner import HookDiagnostics, apply_and_run, load_model, mask_token

__all__ = ["read_records", "write_records", "AdapterManifest", "HookBinding",
           "load_manifest", "HookDiagnostics", "apply_and_run", "load_model",
           "mask_token"]

__version__ = "0.1.0"
