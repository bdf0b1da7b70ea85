from __future__ import annotations

import hashlib
import json

from app.schemas import RunConfig

_HASH_VERSION = "v1"


def build_config_hash(config: RunConfig) -> str:
    payload = config.model_dump(mode="json")
    # Where outputs land does not change what is computed.
    payload["io"].pop("output_dir", None)
    payload["hash_version"] = _HASH_VERSION
    canonical = json.dumps(payload, separators=(",", ":"), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
