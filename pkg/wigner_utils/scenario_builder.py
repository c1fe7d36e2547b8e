import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .fock_oracle import MAX_CUTOFF
from .gaussian_engine import BlockGaussian
from .mode_space import FieldFunction, ModeGrid, norm_sq
from .moyal import displace_state
from .states import (
    MAX_MOMENT_ORDER,
    SPECTRUM_TOLERANCE,
    WignerState,
    coherent_wigner,
    displacement_wigner,
    fock_wigner,
    number_wigner,
    vacuum_wigner,
)
from .verification import DEFAULT_SEED, LATTICE_EXTENT, LATTICE_STEPS, SUITES, lattice, real_line

logger = logging.getLogger(__name__)

OPERATIONS = ["verify", "eval", "moments", "star", "marginal", "stransform"]

SCENARIO_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["operation"],
    "properties": {
        "operation": {"enum": OPERATIONS},
        "grid": {
            "oneOf": [
                {"required": ["weights"], "properties": {"mode_count": "integer", "weights": "number[]", "labels": "array"}},
                {"required": ["mode_count", "uniform"], "properties": {"uniform": True}},
                {"required": ["file"], "properties": {"file": "path relative to the scenario file"}},
            ]
        },
        "states": {
            "type": "array",
            "items": {
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["coherent", "vacuum", "fock", "number_op", "displacement"]},
                    "alpha0": "field",
                    "n": "integer >= 0",
                    "spectrum": "field",
                    "displaced_by": "field",
                },
            },
        },
        "points": {
            "oneOf": [
                {"required": ["values"], "properties": {"values": "field[]"}},
                {"required": ["lattice"], "properties": {"lattice": {"mode": "integer", "extent": "number", "steps": "integer"}}},
            ]
        },
        "s": "number in [-1, 1]",
        "moments": {"m": "integer", "n": "integer"},
        "basis": {"enum": ["q", "p"]},
        "suites": "string[]",
        "oracle": "boolean",
        "cutoff": f"integer in [1, {MAX_CUTOFF}]",
        "seed": "integer",
        "tolerances": {"default": "number > 0", "<check-name>": "number > 0"},
    },
    "definitions": {
        "field": "list of [re, im] pairs or real numbers, one per mode; {\"file\": path}; or {\"basis\": mode}",
    },
}


@dataclass
class Scenario:
    """
    A validated scenario, with every reference resolved against its grid
    """

    operation: str
    grid: Optional[ModeGrid] = None
    states: List[WignerState] = field(default_factory=list)
    points: List[FieldFunction] = field(default_factory=list)
    tolerances: Dict[str, float] = field(default_factory=dict)
    suites: List[str] = field(default_factory=list)
    oracle: bool = False
    cutoff: int = MAX_CUTOFF
    seed: int = DEFAULT_SEED
    s: float = -1.0
    moment_orders: Tuple[int, int] = (1, 0)
    basis: str = "q"
    source: Optional[str] = None


class ScenarioBuilder:
    """
    Class to help facilitate loading scenarios from JSON documents or plain dictionaries
    """

    class ConfigException(Exception):
        """
        Exception raised when a scenario does not match the published schema
        """

        def __init__(self, message: str, location: str = ""):
            super().__init__(f"{location}: {message}" if location else message)
            self.location = location

    @staticmethod
    def create_from(config_path: str, warn_only: bool = False) -> Scenario:
        """
        Method to load and validate a scenario file
        """

        try:
            with open(config_path, "r", encoding="utf-8") as f:
                document = json.load(f)
        except OSError as e:
            raise ScenarioBuilder.ConfigException(f"Cannot read scenario: {e}", config_path)
        except json.JSONDecodeError as e:
            raise ScenarioBuilder.ConfigException(f"Invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", config_path)
        scenario = ScenarioBuilder.create_new(document, os.path.dirname(os.path.abspath(config_path)), warn_only)
        scenario.source = config_path
        return scenario

    @staticmethod
    def create_new(document: dict, base_dir: str = ".", warn_only: bool = False) -> Scenario:
        """
        Method to build a scenario from an already parsed document
        """

        if not isinstance(document, dict):
            raise ScenarioBuilder.ConfigException("A scenario must be a JSON object", "$")
        ScenarioBuilder.validate_keys(document)
        operation = document.get("operation")
        if operation not in OPERATIONS:
            raise ScenarioBuilder.ConfigException(f"Unknown operation {operation!r}. Expected one of {OPERATIONS}", "operation")

        scenario = Scenario(operation)
        scenario.tolerances = ScenarioBuilder.validate_tolerances(document.get("tolerances", {}))
        scenario.seed = ScenarioBuilder.validate_integer(document.get("seed", DEFAULT_SEED), "seed")
        scenario.oracle = bool(document.get("oracle", False))
        scenario.cutoff = ScenarioBuilder.validate_integer(document.get("cutoff", MAX_CUTOFF), "cutoff", 1, MAX_CUTOFF)
        scenario.suites = ScenarioBuilder.validate_suites(document.get("suites", []))
        if operation == "verify":
            return scenario

        if "grid" not in document:
            raise ScenarioBuilder.ConfigException(f"Operation {operation} needs a grid", "grid")
        scenario.grid = ScenarioBuilder.load_grid(document["grid"], base_dir)
        raw_states = document.get("states", [])
        if not isinstance(raw_states, list):
            raise ScenarioBuilder.ConfigException("Expected a list of state descriptors", "states")
        scenario.states = [
            ScenarioBuilder.load_state(descriptor, scenario.grid, base_dir, f"states[{i}]", warn_only)
            for i, descriptor in enumerate(raw_states)
        ]
        required = 2 if operation == "star" else 1
        if len(scenario.states) < required:
            raise ScenarioBuilder.ConfigException(f"Operation {operation} needs at least {required} state(s)", "states")
        if operation == "star" and len(scenario.states) > 3:
            raise ScenarioBuilder.ConfigException("Star products take two or three states", "states")

        scenario.basis = document.get("basis", "q")
        if scenario.basis not in ("q", "p"):
            raise ScenarioBuilder.ConfigException(f"Basis must be 'q' or 'p'. Got {scenario.basis!r}", "basis")
        if operation != "moments":
            scenario.points = ScenarioBuilder.load_points(
                document.get("points", {"lattice": {}}), scenario.grid, base_dir, operation == "marginal"
            )
        if operation == "stransform":
            scenario.s = ScenarioBuilder.validate_number(document.get("s", -1.0), "s")
            if not -1.0 <= scenario.s <= 1.0:
                raise ScenarioBuilder.ConfigException(f"s must lie in [-1, 1]. Got {scenario.s}", "s")
        if operation == "moments":
            orders = document.get("moments", {})
            m = ScenarioBuilder.validate_integer(orders.get("m", 1), "moments.m", 0, MAX_MOMENT_ORDER)
            n = ScenarioBuilder.validate_integer(orders.get("n", 0), "moments.n", 0, MAX_MOMENT_ORDER)
            if m + n > MAX_MOMENT_ORDER:
                raise ScenarioBuilder.ConfigException(f"Total moment order must not exceed {MAX_MOMENT_ORDER}", "moments")
            scenario.moment_orders = (m, n)
        return scenario

    @staticmethod
    def validate_keys(document: dict):
        unknown = sorted(set(document) - set(SCENARIO_SCHEMA["properties"]))
        if unknown:
            raise ScenarioBuilder.ConfigException(f"Unknown keys {unknown}", "$")

    @staticmethod
    def validate_number(value, location: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ScenarioBuilder.ConfigException(f"Expected a finite number, got {value!r}", location)
        return float(value)

    @staticmethod
    def validate_integer(value, location: str, low: Optional[int] = None, high: Optional[int] = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioBuilder.ConfigException(f"Expected an integer, got {value!r}", location)
        if (low is not None and value < low) or (high is not None and value > high):
            raise ScenarioBuilder.ConfigException(f"Expected an integer in [{low}, {high}], got {value}", location)
        return value

    @staticmethod
    def validate_tolerances(tolerances) -> Dict[str, float]:
        """
        Method to validate tolerance overrides are positive numbers
        """

        if not isinstance(tolerances, dict):
            raise ScenarioBuilder.ConfigException("Expected an object of tolerances", "tolerances")
        validated = {}
        for name, value in tolerances.items():
            value = ScenarioBuilder.validate_number(value, f"tolerances.{name}")
            if value <= 0:
                raise ScenarioBuilder.ConfigException(f"Tolerances must be positive, got {value}", f"tolerances.{name}")
            validated[name] = value
        return validated

    @staticmethod
    def validate_suites(suites) -> List[str]:
        if isinstance(suites, str):
            suites = [suites]
        if not isinstance(suites, list):
            raise ScenarioBuilder.ConfigException("Expected a list of suite names", "suites")
        for i, name in enumerate(suites):
            if name not in SUITES:
                raise ScenarioBuilder.ConfigException(f"Unknown suite {name!r}. Available: {list(SUITES)}", f"suites[{i}]")
        return list(suites)

    @staticmethod
    def load_grid(spec, base_dir: str) -> ModeGrid:
        """
        Method to resolve an inline or file grid specification
        """

        if not isinstance(spec, dict):
            raise ScenarioBuilder.ConfigException("Expected a grid object", "grid")
        if "file" in spec:
            path = os.path.join(base_dir, spec["file"])
            if not os.path.exists(path):
                raise ScenarioBuilder.ConfigException(f"Grid file {spec['file']} does not exist", "grid.file")
            try:
                return ModeGrid.load(path)
            except (OSError, ValueError, KeyError, TypeError) as e:
                raise ScenarioBuilder.ConfigException(f"Cannot load grid file: {e}", "grid.file")
        try:
            return ModeGrid.from_json_dict(spec)
        except KeyError as e:
            raise ScenarioBuilder.ConfigException(f"Missing key {e}", "grid")
        except (ValueError, TypeError) as e:
            raise ScenarioBuilder.ConfigException(str(e), "grid")

    @staticmethod
    def load_field(spec, grid: ModeGrid, base_dir: str, location: str) -> FieldFunction:
        """
        Method to resolve a field given as [re, im] pairs, a file reference or a basis mode
        """

        if isinstance(spec, dict):
            if "file" in spec:
                path = os.path.join(base_dir, spec["file"])
                try:
                    with open(path, "r", encoding="utf-8") as f:
                        return FieldFunction.from_json_dict(grid, json.load(f))
                except (OSError, ValueError, KeyError) as e:
                    raise ScenarioBuilder.ConfigException(f"Cannot load field file: {e}", f"{location}.file")
                except (ModeGrid.GridMismatchException, FieldFunction.FieldException) as e:
                    raise ScenarioBuilder.ConfigException(str(e), f"{location}.file")
            if "basis" in spec:
                mode = ScenarioBuilder.validate_integer(spec["basis"], f"{location}.basis", 0, grid.mode_count - 1)
                return FieldFunction.basis(grid, mode)
            raise ScenarioBuilder.ConfigException("Expected 'file' or 'basis'", location)

        if not isinstance(spec, list) or len(spec) != grid.mode_count:
            raise ScenarioBuilder.ConfigException(f"Expected {grid.mode_count} amplitudes", location)
        values = []
        for i, entry in enumerate(spec):
            if isinstance(entry, list) and len(entry) == 2:
                re = ScenarioBuilder.validate_number(entry[0], f"{location}[{i}][0]")
                im = ScenarioBuilder.validate_number(entry[1], f"{location}[{i}][1]")
                values.append(complex(re, im))
            else:
                values.append(complex(ScenarioBuilder.validate_number(entry, f"{location}[{i}]")))
        return FieldFunction(grid, np.array(values))

    @staticmethod
    def load_state(descriptor, grid: ModeGrid, base_dir: str, location: str, warn_only: bool = False) -> WignerState:
        """
        Method to build a Wigner state from its descriptor
        """

        if not isinstance(descriptor, dict) or "kind" not in descriptor:
            raise ScenarioBuilder.ConfigException("Expected an object with a 'kind'", location)
        kind = descriptor["kind"]
        if kind == "coherent":
            state = coherent_wigner(ScenarioBuilder.load_field(descriptor.get("alpha0"), grid, base_dir, f"{location}.alpha0"))
        elif kind == "vacuum":
            state = vacuum_wigner(grid)
        elif kind == "displacement":
            state = displacement_wigner(
                ScenarioBuilder.load_field(descriptor.get("alpha0"), grid, base_dir, f"{location}.alpha0")
            )
        elif kind == "number_op":
            state = number_wigner(grid)
        elif kind == "fock":
            n = ScenarioBuilder.validate_integer(descriptor.get("n"), f"{location}.n", 0)
            spectrum = ScenarioBuilder.load_field(descriptor.get("spectrum", {"basis": 0}), grid, base_dir, f"{location}.spectrum")
            spectrum = ScenarioBuilder.validate_spectrum(spectrum, f"{location}.spectrum", warn_only)
            try:
                state = fock_wigner(n, spectrum)
            except BlockGaussian.UnsupportedOrderException as e:
                raise ScenarioBuilder.ConfigException(str(e), f"{location}.n")
        else:
            raise ScenarioBuilder.ConfigException(f"Unknown state kind {kind!r}", f"{location}.kind")

        if "displaced_by" in descriptor:
            shift = ScenarioBuilder.load_field(descriptor["displaced_by"], grid, base_dir, f"{location}.displaced_by")
            state = displace_state(state, shift)
        logger.debug(f">> Loaded {location} as {state.description}")
        return state

    @staticmethod
    def validate_spectrum(spectrum: FieldFunction, location: str, warn_only: bool = False) -> FieldFunction:
        """
        Method to validate a Fock spectrum is normalized; with warn_only it is
        renormalized after a warning instead
        """

        measured = norm_sq(spectrum)
        if abs(measured - 1) <= SPECTRUM_TOLERANCE:
            return spectrum
        msg = f"Spectrum has norm squared {measured!r}, expected 1"
        if warn_only and measured > 0:
            warnings.warn(f"{location}: {msg}; renormalizing")
            return spectrum / math.sqrt(measured)
        raise ScenarioBuilder.ConfigException(msg, location)

    @staticmethod
    def load_points(spec, grid: ModeGrid, base_dir: str, real: bool = False) -> List[FieldFunction]:
        """
        Method to resolve explicit points or a lattice over one mode; marginal
        points are real and a lattice for them runs along the real axis only
        """

        if not isinstance(spec, dict):
            raise ScenarioBuilder.ConfigException("Expected a points object", "points")
        if "values" in spec:
            if not isinstance(spec["values"], list) or not spec["values"]:
                raise ScenarioBuilder.ConfigException("Expected a non-empty list of points", "points.values")
            points = [
                ScenarioBuilder.load_field(value, grid, base_dir, f"points.values[{i}]") for i, value in enumerate(spec["values"])
            ]
            if real:
                for i, point in enumerate(points):
                    if not point.is_real:
                        raise ScenarioBuilder.ConfigException("Marginal points must be real", f"points.values[{i}]")
            return points
        if "lattice" in spec:
            options = spec["lattice"]
            if not isinstance(options, dict):
                raise ScenarioBuilder.ConfigException("Expected a lattice object", "points.lattice")
            mode = ScenarioBuilder.validate_integer(options.get("mode", 0), "points.lattice.mode", 0, grid.mode_count - 1)
            extent = ScenarioBuilder.validate_number(options.get("extent", LATTICE_EXTENT), "points.lattice.extent")
            steps = ScenarioBuilder.validate_integer(options.get("steps", LATTICE_STEPS), "points.lattice.steps", 1)
            if real:
                return real_line(grid, mode, extent, steps)
            return lattice(grid, mode, extent, steps)
        raise ScenarioBuilder.ConfigException("Expected 'values' or 'lattice'", "points")
