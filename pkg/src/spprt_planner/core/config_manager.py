"""
Configuration management for design, calibration and sweep documents.

Documents are JSON; files ending in .yaml or .yml are read as YAML. Validation names the
offending field so a malformed config can be fixed without reading code.
"""

import json
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import yaml

from ..analysis.calibration import CalibrationSpec
from ..analysis.sweep import SweepSettings
from ..types.errors import ConfigurationError, DomainError
from ..types.model import CostModel, DesignConfig, Hypotheses, StopRiskParams

CONFIG_ENV_VAR = "SPPRT_CONFIG"
DEFAULT_CONFIG = "./config.json"
DEFAULT_GRID_STEP = 0.1
YAML_SUFFIXES = (".yaml", ".yml")

REQUIRED_FIELDS = ['theta0', 'theta1', 'groupSizes', 'cost', 'gamma', 'K']


@dataclass
class ConfigPaths:
    """Configuration file path resolution."""
    cli_arg: Optional[str] = None
    env_var: Optional[str] = None
    default: str = DEFAULT_CONFIG

    def resolve(self) -> str:
        """Resolve configuration file path using priority order."""
        if self.cli_arg:
            return self.cli_arg
        if self.env_var:
            return self.env_var
        return self.default


def _invalid(field: str, reason: str) -> ConfigurationError:
    return ConfigurationError(f"Invalid value for field '{field}': {reason}")


def _number(section: Dict[str, Any], key: str, field: Optional[str] = None,
    default: Optional[float] = None
) -> float:
    field = field or key
    value = section.get(key, default)
    if value is None:
        raise ConfigurationError(f"Missing required field: {field}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _invalid(field, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise _invalid(field, "must be finite")
    return float(value)


def _integer(section: Dict[str, Any], key: str, field: Optional[str] = None,
    default: Optional[int] = None
) -> int:
    field = field or key
    value = _number(section, key, field, default)
    if value != int(value):
        raise _invalid(field, f"expected an integer, got {value}")
    return int(value)


def _section(config: Dict[str, Any], key: str, required: bool = False) -> Dict[str, Any]:
    value = config.get(key)
    if value is None:
        if required:
            raise ConfigurationError(f"Missing required field: {key}")
        return {}
    if not isinstance(value, dict):
        raise _invalid(key, "expected an object")
    return value


def parse_group_sizes(value: Any) -> List[int]:
    """Explicit list, or {min, max, step} range with both ends included."""
    if isinstance(value, dict):
        low = _integer(value, 'min', 'groupSizes.min')
        high = _integer(value, 'max', 'groupSizes.max')
        step = _integer(value, 'step', 'groupSizes.step', default=1)
        if step < 1 or low < 1 or high < low:
            raise _invalid('groupSizes', "range needs 1 <= min <= max and step >= 1")
        return list(range(low, high + 1, step))
    if isinstance(value, list) and value:
        sizes = []
        for item in value:
            if isinstance(item, bool) or not isinstance(item, int) or item < 1:
                raise _invalid('groupSizes', f"expected positive integers, got {item!r}")
            sizes.append(item)
        if sorted(set(sizes)) != sizes:
            raise _invalid('groupSizes', "sizes must be sorted and distinct")
        return sizes
    raise _invalid('groupSizes', "expected a nonempty list or a {min, max, step} object")


def parse_cost(value: Any) -> CostModel:
    if not isinstance(value, dict):
        raise _invalid('cost', "expected {c0, cu} or {table}")
    if 'table' in value:
        table = value['table']
        if not isinstance(table, dict) or not table:
            raise _invalid('cost.table', "expected a nonempty map from group size to cost")
        try:
            entries = {int(m): float(c) for m, c in table.items()}
        except (TypeError, ValueError) as e:
            raise _invalid('cost.table', str(e))
        return CostModel.from_table(entries)
    c0 = _number(value, 'c0', 'cost.c0', default=0.0)
    cu = _number(value, 'cu', 'cost.cu')
    if c0 < 0:
        raise _invalid('cost.c0', "must be nonnegative")
    if cu <= 0:
        raise _invalid('cost.cu', "must be positive")
    return CostModel.affine(c0, cu)


class ConfigManager:
    """Loads a document and hands out typed, validated views of it."""

    def __init__(self):
        self._config: Optional[Dict[str, Any]] = None
        self._config_path: Optional[str] = None

    def load_config(self, config_path: str) -> Dict[str, Any]:
        """
        Load and validate configuration from file.

        Raises:
            ConfigurationError: If the file cannot be read or is invalid
        """
        if not os.path.exists(config_path):
            raise ConfigurationError(f"Configuration file not found: {config_path}")
        # yaml.safe_load reads JSON exponents such as 1e-9 as strings
        is_yaml = config_path.lower().endswith(YAML_SUFFIXES)
        try:
            with open(config_path, 'r', encoding='utf-8') as file:
                data = yaml.safe_load(file) if is_yaml else json.load(file)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Invalid document in config file {config_path}: {e}")
        except OSError as e:
            raise ConfigurationError(f"Error loading config file {config_path}: {e}")
        self._config_path = config_path
        return self.load_document(data)

    def load_document(self, data: Any) -> Dict[str, Any]:
        """Validate an already parsed document."""
        if not data:
            raise ConfigurationError("Configuration is empty")
        if not isinstance(data, dict):
            raise ConfigurationError("Configuration must be an object")
        self._config = data
        self._validate_config()
        return data

    def _validate_config(self):
        for field in REQUIRED_FIELDS:
            if field not in self._config:
                raise ConfigurationError(f"Missing required field: {field}")
        for field in ('theta0', 'theta1'):
            value = _number(self._config, field)
            if not (0.0 < value < 1.0):
                raise _invalid(field, "must lie strictly between 0 and 1")
        gamma = _number(self._config, 'gamma')
        if not (0.0 <= gamma <= 1.0):
            raise _invalid('gamma', "must lie in [0, 1]")
        if _integer(self._config, 'K') < 1:
            raise _invalid('K', "must be at least 1")
        if _number(self._config, 'gridStep', default=DEFAULT_GRID_STEP) <= 0:
            raise _invalid('gridStep', "must be positive")
        parse_group_sizes(self._config['groupSizes'])
        parse_cost(self._config['cost'])

    @property
    def config(self) -> Dict[str, Any]:
        """Get current configuration."""
        if not self._config:
            raise ConfigurationError("Configuration not loaded")
        return self._config

    @property
    def config_path(self) -> str:
        if not self._config_path:
            raise ConfigurationError("Configuration not loaded")
        return self._config_path

    def get_lambdas(self, required: bool = True) -> Optional[StopRiskParams]:
        config = self.config
        if 'lambda0' not in config and 'lambda1' not in config and not required:
            return None
        lambda0 = _number(config, 'lambda0')
        lambda1 = _number(config, 'lambda1')
        for field, value in (('lambda0', lambda0), ('lambda1', lambda1)):
            if value <= 0:
                raise _invalid(field, "must be positive")
        return StopRiskParams(lambda0, lambda1)

    def get_design_config(self,
        params: Optional[StopRiskParams] = None,
        cost: Optional[CostModel] = None
    ) -> DesignConfig:
        """
        Build the DesignConfig; ``params`` replaces the document's multipliers
        (calibration specs carry initial values instead).
        """
        config = self.config
        tolerances = _section(config, 'tolerances')
        try:
            return DesignConfig(
                hyp=Hypotheses(_number(config, 'theta0'), _number(config, 'theta1')),
                group_sizes=tuple(parse_group_sizes(config['groupSizes'])),
                cost=cost or parse_cost(config['cost']),
                gamma=_number(config, 'gamma'),
                params=params or self.get_lambdas(),
                K=_integer(config, 'K'),
                h=_number(config, 'gridStep', default=DEFAULT_GRID_STEP),
                bisect_tol=_number(tolerances, 'bisectTol', 'tolerances.bisectTol', default=1e-9),
                bracket_cap=_number(tolerances, 'bracketCap', 'tolerances.bracketCap', default=200.0),
            )
        except DomainError as e:
            raise ConfigurationError(f"Invalid design configuration: {e}")

    def get_calibration_spec(self) -> CalibrationSpec:
        config = self.config
        targets = _section(config, 'targets', required=True)
        initial = _section(config, 'initialLambda')
        settings = _section(config, 'calibration')
        if initial:
            init0 = _number(initial, 'lambda0', 'initialLambda.lambda0')
            init1 = _number(initial, 'lambda1', 'initialLambda.lambda1')
        else:
            params = self.get_lambdas()
            init0, init1 = params.lambda0, params.lambda1
        restart = settings.get('restart', False)
        if not isinstance(restart, bool):
            raise _invalid('calibration.restart', "expected true or false")
        try:
            return CalibrationSpec(
                base=self.get_design_config(params=StopRiskParams(init0, init1)),
                target_alpha=_number(targets, 'alpha', 'targets.alpha'),
                target_beta=_number(targets, 'beta', 'targets.beta'),
                init_lambda0=init0,
                init_lambda1=init1,
                max_iter=_integer(settings, 'maxIter', 'calibration.maxIter', default=200),
                dist_tol=_number(settings, 'distTol', 'calibration.distTol', default=0.01),
                simplex_scale=_number(settings, 'simplexScale', 'calibration.simplexScale', default=0.25),
                restart=restart,
            )
        except DomainError as e:
            raise ConfigurationError(f"Invalid calibration settings: {e}")

    def get_sweep_settings(self) -> SweepSettings:
        sweep = _section(self.config, 'sweep')
        alpha = sweep.get('alpha')
        beta = sweep.get('beta')
        try:
            settings = SweepSettings(
                log_lambda_min=_number(sweep, 'logLambdaMin', 'sweep.logLambdaMin', default=3.0),
                log_lambda_max=_number(sweep, 'logLambdaMax', 'sweep.logLambdaMax', default=6.3),
                points=_integer(sweep, 'points', 'sweep.points', default=9),
                alpha=None if alpha is None else _number(sweep, 'alpha', 'sweep.alpha'),
                beta=None if beta is None else _number(sweep, 'beta', 'sweep.beta'),
            )
        except DomainError as e:
            raise ConfigurationError(f"Invalid sweep settings: {e}")
        scale = self.get_cost_scale()
        return settings.shifted(scale) if scale != 1.0 else settings

    def get_cost_scale(self) -> float:
        scale = _number(self.config, 'costScale', default=1.0)
        if scale <= 0:
            raise _invalid('costScale', "must be positive")
        return scale

    def get_targets(self) -> Optional[Dict[str, float]]:
        targets = _section(self.config, 'targets')
        if not targets:
            return None
        return {
            'alpha': _number(targets, 'alpha', 'targets.alpha'),
            'beta': _number(targets, 'beta', 'targets.beta'),
        }


def resolve_config_path(cli_arg: Optional[str] = None) -> str:
    """
    Resolve configuration file path: command line, then SPPRT_CONFIG, then ./config.json.
    """
    paths = ConfigPaths(
        cli_arg=cli_arg,
        env_var=os.environ.get(CONFIG_ENV_VAR),
        default=DEFAULT_CONFIG
    )
    return paths.resolve()
