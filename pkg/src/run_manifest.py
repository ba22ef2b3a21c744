"""Run manifest: a YAML log of every command run against an output directory."""

from pathlib import Path
from typing import Any, Optional

import yaml

from .artifacts import atomic_write_text, sha256_file
from .config import TOOL_VERSION

MANIFEST_NAME = "run_manifest.yaml"


class RunManifest:
    """
    Record commands and the files they produced, with YAML persistence.

    Handles:
    - Loading/saving the manifest from/to `<out_dir>/run_manifest.yaml`
    - Appending one entry per command (arguments, config, seed, outputs)
    - Hashing outputs so a re-run can be checked for identical results
    """

    def __init__(self, out_dir: str | Path):
        """
        Initialize the manifest for an output directory.

        Args:
            out_dir: Directory holding the run's outputs
        """
        self.out_dir = Path(out_dir)
        self.manifest_path = self.out_dir / MANIFEST_NAME
        self.manifest_data: dict[str, Any] = {}

    def load_manifest(self) -> dict[str, Any]:
        """
        Load the manifest, starting an empty one if none exists yet.

        Always reads from disk so entries from earlier commands are kept.

        Returns:
            Manifest dictionary with 'tool_version' and 'runs' keys

        Raises:
            yaml.YAMLError: Invalid YAML in an existing manifest
        """
        if self.manifest_path.exists():
            with open(self.manifest_path, "r") as f:
                self.manifest_data = yaml.safe_load(f) or {}
        else:
            self.manifest_data = {}

        # Ensure required keys exist
        self.manifest_data.setdefault("tool_version", TOOL_VERSION)
        self.manifest_data.setdefault("runs", [])
        return self.manifest_data

    def save_manifest(self) -> None:
        """Write the manifest atomically."""
        text = yaml.safe_dump(self.manifest_data, default_flow_style=False, sort_keys=False)
        atomic_write_text(self.manifest_path, text)

    def _relative(self, path: Path) -> str:
        try:
            return str(path.resolve().relative_to(self.out_dir.resolve()))
        except ValueError:
            return str(path)

    def record(
        self,
        command: str,
        arguments: dict[str, Any],
        outputs: list[str | Path],
        config: Optional[dict[str, Any]] = None,
        seed: Optional[int] = None,
    ) -> dict[str, Any]:
        """
        Append an entry for a finished command and save.

        Args:
            command: Subcommand name
            arguments: Command-line arguments (plain values)
            outputs: Files the command wrote
            config: Validated config document, when one was used
            seed: Root seed, when the command is stochastic

        Returns:
            The appended entry
        """
        self.load_manifest()
        entry: dict[str, Any] = {
            "command": command,
            "tool_version": TOOL_VERSION,
            "arguments": arguments,
            "config": config or {},
            "seed": seed,
            "outputs": [{"path": self._relative(Path(p)), "sha256": sha256_file(p)} for p in outputs],
        }
        self.manifest_data["runs"].append(entry)
        self.save_manifest()
        return entry

    def entries_for(self, command: str) -> list[dict[str, Any]]:
        """All recorded entries of one command, oldest first."""
        return [run for run in self.manifest_data.get("runs", []) if run.get("command") == command]

    def outputs_unchanged(self, entry: dict[str, Any]) -> bool:
        """
        Check that an entry's outputs still hash to the recorded values.

        Returns:
            True when every listed file exists with the recorded SHA-256
        """
        for output in entry.get("outputs", []):
            path = Path(output["path"])
            if not path.is_absolute():
                path = self.out_dir / path
            if not path.exists() or sha256_file(path) != output["sha256"]:
                return False
        return True
