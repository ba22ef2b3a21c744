"""YAML experiment configuration.

A config is a mapping of optional sections:

    source:      pair_rate_hz, duration_s, seed
    detectors:   efficiency_A, efficiency_B0, efficiency_B1, dark_rate_hz, jitter_ps, dead_time_ps
    splitter:    bias_ratio_R, depth_M0, depth_M1, grey_levels
    projection:  sigma | fwhm | spectrum_file, l_max, l_B0, l_B1, l_A, crosstalk
    coincidence: window_ps, policy
    tests:       alpha, suite

Missing sections and keys take the defaults from `config.py`.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .coincidence import AmbiguityPolicy, CoincidenceParams
from .config import COINCIDENCE_WINDOW_PS, DEFAULT_L_MAX, DEFAULT_SIGMA, SIGNIFICANCE_ALPHA
from .exceptions import ConfigError, QrngError
from .hologram import SplitterConfig
from .photon_sim import ExperimentConfig, ProjectionSetting
from .spdc_model import gaussian_spectrum, load_spectrum, sigma_from_fwhm

REAL = "real"
INTEGER = "integer"
OPTIONAL_INTEGER = "integer or null"
TEXT = "text"
RATES = "real or list of three reals"

SCHEMA: dict[str, dict[str, str]] = {
    "source": {"pair_rate_hz": REAL, "duration_s": REAL, "seed": INTEGER},
    "detectors": {
        "efficiency_A": REAL,
        "efficiency_B0": REAL,
        "efficiency_B1": REAL,
        "dark_rate_hz": RATES,
        "jitter_ps": REAL,
        "dead_time_ps": REAL,
    },
    "splitter": {"bias_ratio_R": REAL, "depth_M0": REAL, "depth_M1": REAL, "grey_levels": INTEGER},
    "projection": {
        "sigma": REAL,
        "fwhm": REAL,
        "spectrum_file": TEXT,
        "l_max": INTEGER,
        "l_B0": OPTIONAL_INTEGER,
        "l_B1": OPTIONAL_INTEGER,
        "l_A": OPTIONAL_INTEGER,
        "crosstalk": REAL,
    },
    "coincidence": {"window_ps": INTEGER, "policy": TEXT},
    "tests": {"alpha": REAL, "suite": TEXT},
}


@dataclass(frozen=True)
class RunSettings:
    """
    Everything a pipeline run needs from a config file.

    Attributes:
        experiment: Simulation parameters
        coincidence: Extraction parameters
        alpha: Significance level for the test battery
        suite: Test suite name
        document: The validated YAML mapping, for the run manifest
    """

    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    coincidence: CoincidenceParams = field(default_factory=CoincidenceParams)
    alpha: float = SIGNIFICANCE_ALPHA
    suite: str = "core"
    document: dict[str, Any] = field(default_factory=dict)

    def with_seed(self, seed: Optional[int]) -> "RunSettings":
        """Copy with the experiment seed replaced (None keeps it)."""
        if seed is None:
            return self
        return replace(self, experiment=replace(self.experiment, seed=seed))


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_integer(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_type(section: str, key: str, value: Any, kind: str) -> None:
    ok = {
        REAL: _is_real(value),
        INTEGER: _is_integer(value),
        OPTIONAL_INTEGER: value is None or _is_integer(value),
        TEXT: isinstance(value, str),
        RATES: _is_real(value)
        or (isinstance(value, list) and len(value) == 3 and all(_is_real(v) for v in value)),
    }[kind]
    if not ok:
        raise ConfigError(f"{section}.{key} must be {kind}, got {value!r}")


def validate_document(document: Any) -> dict[str, dict[str, Any]]:
    """
    Check a parsed YAML document against the schema.

    Returns:
        Mapping of the sections present, each a plain dict

    Raises:
        ConfigError: Unknown section or key, or a value of the wrong type
    """
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("Config must be a mapping of sections")

    validated: dict[str, dict[str, Any]] = {}
    for section, body in document.items():
        if section not in SCHEMA:
            raise ConfigError(f"Unknown config section '{section}', expected one of {sorted(SCHEMA)}")
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ConfigError(f"Section '{section}' must be a mapping")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"Unknown key '{section}.{key}', expected one of {sorted(SCHEMA[section])}")
            _check_type(section, key, value, SCHEMA[section][key])
        validated[section] = dict(body)
    return validated


def _build_projection(body: dict[str, Any], base_dir: Path) -> ProjectionSetting:
    sources = [key for key in ("sigma", "fwhm", "spectrum_file") if key in body]
    if len(sources) > 1:
        raise ConfigError(f"projection: give only one of sigma, fwhm, spectrum_file (got {sources})")

    if "spectrum_file" in body:
        spectrum_path = Path(body["spectrum_file"])
        if not spectrum_path.is_absolute():
            spectrum_path = base_dir / spectrum_path
        spectrum = load_spectrum(spectrum_path)
    else:
        if "sigma" in body:
            sigma = body["sigma"]
        elif "fwhm" in body:
            sigma = sigma_from_fwhm(body["fwhm"])
        else:
            sigma = DEFAULT_SIGMA
        spectrum = gaussian_spectrum(float(sigma), int(body.get("l_max", DEFAULT_L_MAX)))

    return ProjectionSetting(
        spectrum=spectrum,
        l_B0=body.get("l_B0", 0),
        l_B1=body.get("l_B1", 0),
        l_A=body.get("l_A"),
        crosstalk=float(body.get("crosstalk", 0.0)),
    )


def parse_config(document: Any, base_dir: str | Path = ".") -> RunSettings:
    """
    Build run settings from a parsed YAML document.

    Args:
        document: Mapping loaded from YAML
        base_dir: Directory relative spectrum files are resolved against

    Returns:
        RunSettings

    Raises:
        ConfigError: Schema violation or out-of-range value
    """
    sections = validate_document(document)
    source = sections.get("source", {})
    detectors = sections.get("detectors", {})
    tests = sections.get("tests", {})

    try:
        splitter = SplitterConfig(**sections.get("splitter", {}))
        projection = (
            _build_projection(sections["projection"], Path(base_dir)) if "projection" in sections else None
        )
        kwargs = {**source, **detectors}
        if isinstance(kwargs.get("dark_rate_hz"), list):
            kwargs["dark_rate_hz"] = tuple(kwargs["dark_rate_hz"])
        experiment = ExperimentConfig(**kwargs, splitter=splitter, projection=projection)
        coincidence_body = sections.get("coincidence", {})
        coincidence = CoincidenceParams(
            window_ps=coincidence_body.get("window_ps", COINCIDENCE_WINDOW_PS),
            policy=AmbiguityPolicy(coincidence_body.get("policy", AmbiguityPolicy.DISCARD_AMBIGUOUS.value)),
        )
    except ConfigError:
        raise
    except (ValueError, QrngError) as e:
        raise ConfigError(f"Invalid config value: {e}") from e
    except OSError as e:
        raise ConfigError(f"Cannot read spectrum file: {e}") from e

    alpha = float(tests.get("alpha", SIGNIFICANCE_ALPHA))
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"tests.alpha must lie in (0, 1), got {alpha}")
    suite = tests.get("suite", "core")
    if suite not in ("core", "full"):
        raise ConfigError(f"tests.suite must be 'core' or 'full', got {suite!r}")

    return RunSettings(experiment, coincidence, alpha, suite, sections)


def load_config(path: Optional[str | Path]) -> RunSettings:
    """
    Load a YAML experiment config; None gives the defaults.

    Raises:
        OSError: File missing or unreadable
        ConfigError: Invalid YAML or schema violation
    """
    if path is None:
        return RunSettings()
    path = Path(path)
    with open(path, "r") as f:
        try:
            document = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from e
    return parse_config(document, path.parent)
