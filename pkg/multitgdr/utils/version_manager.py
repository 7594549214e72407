from typing import Any, Dict

from ..errors import SchemaVersionError
from ..models import SCHEMA_VERSION


def check_schema_version(document: Dict[str, Any], path: str = "<model>") -> None:
    """Reject model documents written by another schema version"""
    version = document.get("schema_version")
    if version is None:
        raise SchemaVersionError(f"{path} has no schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path} has schema_version {version}, this build reads {SCHEMA_VERSION}"
        )
