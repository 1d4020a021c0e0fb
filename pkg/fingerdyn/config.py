"""
Run configuration files.

A run configuration is one JSON document with the sections `params`, `sim`,
`profile` and, for calibration runs, `calibration`. Relative file paths inside
it resolve against the directory of the config file.
"""
from __future__ import annotations

import json
import math
from dataclasses import MISSING, dataclass, fields
from pathlib import Path
from typing import Optional, Union

from .actuation import ForceProfile, Pulse, Ramp, Step, load_force_table
from .calibration import CalibrationProblem, load_reference_csv
from .enums import CalibratedParam, FitMethod, Integrator, ModelVariant, ProfileKind, enum_from_string
from .exceptions import ParseError, ValidationError
from .integrators import AdaptiveTolerance
from .params import FingerParams, JointState
from .simulation import SimConfig

SECTIONS = ('params', 'sim', 'profile', 'calibration')
_PARAM_KEYS = tuple(f.name for f in fields(FingerParams))
_SIM_KEYS = ('integrator', 'step', 't_end', 'record_every', 'variant', 'initial', 'tolerance')
_PROFILE_KEYS = {
    ProfileKind.Step: ('F0', 't_on', 't_off'),
    ProfileKind.Ramp: ('F0', 'F1', 't0', 't1'),
    ProfileKind.Pulse: ('F0', 'period', 'duty'),
    ProfileKind.Table: ('path',),
}
_CALIBRATION_KEYS = ('free', 'bounds', 'x0', 'weights', 'method', 'reference')


@dataclass(frozen=True)
class CalibrationSpec:
    """the `calibration` section: what to free and how, the reference file may come from the command line"""
    free: tuple
    bounds: tuple
    x0: tuple
    weights: tuple = (1.0, 1.0, 1.0)
    method: FitMethod = FitMethod.NelderMead
    reference: Optional[Path] = None


@dataclass(frozen=True)
class RunConfig:
    params: FingerParams
    sim: SimConfig
    profile: ForceProfile
    calibration: Optional[CalibrationSpec] = None
    source: Optional[Path] = None


def _check_keys(section: dict, allowed, where: str):
    if not isinstance(section, dict):
        raise ValidationError(where or 'config', f'must be a JSON object, got {type(section).__name__}')
    for key in section:
        if key not in allowed:
            raise ValidationError(f'{where}.{key}' if where else key,
                                  f'unknown key, expected one of {", ".join(allowed)}')


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f'must be a number, got {value!r}')
    return float(value)


def _vector3(value, key: str) -> tuple:
    if not isinstance(value, list) or len(value) != 3:
        raise ValidationError(key, f'must be a list of 3 numbers, got {value!r}')
    return tuple(_number(v, f'{key}[{i}]') for i, v in enumerate(value))


def _resolve(path_value, base: Path, key: str) -> Path:
    if not isinstance(path_value, str) or not path_value:
        raise ValidationError(key, f'must be a file path, got {path_value!r}')
    path = Path(path_value)
    return path if path.is_absolute() else base / path


def parse_params(section: dict) -> FingerParams:
    """
    build FingerParams from the `params` section; `kt` sets all three springs

    :raises ValidationError: key path relative to the section
    """
    _check_keys(section, _PARAM_KEYS + ('kt',), 'params')
    values = dict(section)
    if 'kt' in values:
        clash = [k for k in ('kt1', 'kt2', 'kt3') if k in values]
        if clash:
            raise ValidationError(f'params.{clash[0]}', 'give either kt or kt1..kt3, not both')
        kt = values.pop('kt')
        values.update(kt1=kt, kt2=kt, kt3=kt)
    missing = [f.name for f in fields(FingerParams) if f.name not in values and f.default is MISSING]
    if missing:
        raise ValidationError(f'params.{missing[0]}', 'required')
    try:
        return FingerParams(**values)
    except ValidationError as err:
        raise err.prefixed('params') from None


def parse_sim(section: dict) -> SimConfig:
    """build SimConfig from the `sim` section, omitted keys take the SimConfig defaults"""
    _check_keys(section, _SIM_KEYS, 'sim')
    kwargs = {}
    if 'integrator' in section:
        kwargs['integrator'] = enum_from_string(Integrator, section['integrator'], 'sim.integrator')
    if 'variant' in section:
        kwargs['variant'] = enum_from_string(ModelVariant, section['variant'], 'sim.variant')
    for key in ('step', 't_end', 'record_every'):
        if key in section:
            kwargs[key] = _number(section[key], f'sim.{key}')
    if 'initial' in section:
        initial = section['initial']
        _check_keys(initial, ('q', 'qdot'), 'sim.initial')
        q = _vector3(initial.get('q', [0, 0, 0]), 'sim.initial.q')
        qdot = _vector3(initial.get('qdot', [0, 0, 0]), 'sim.initial.qdot')
        kwargs['initial'] = JointState(q, qdot)
    if 'tolerance' in section:
        tol = section['tolerance']
        _check_keys(tol, ('rtol', 'atol', 'h_min', 'h_max'), 'sim.tolerance')
        try:
            kwargs['tolerance'] = AdaptiveTolerance(**{k: _number(v, k) for k, v in tol.items()})
        except ValidationError as err:
            raise err.prefixed('sim.tolerance') from None
    try:
        return SimConfig(**kwargs)
    except ValidationError as err:
        raise err.prefixed('sim') from None


def parse_profile(section: dict, base: Path) -> ForceProfile:
    """build a force profile from the `profile` section, `kind` selects the shape"""
    if not isinstance(section, dict):
        raise ValidationError('profile', 'must be a JSON object')
    kind = enum_from_string(ProfileKind, section.get('kind'), 'profile.kind')
    _check_keys(section, ('kind',) + _PROFILE_KEYS[kind], 'profile')
    if kind is ProfileKind.Table:
        if 'path' not in section:
            raise ValidationError('profile.path', 'required for table profiles')
        return load_force_table(_resolve(section['path'], base, 'profile.path'))

    values = {}
    for key, value in section.items():
        if key == 'kind':
            continue
        # null t_off means the step never ends
        values[key] = math.inf if key == 't_off' and value is None else _number(value, f'profile.{key}')
    cls = {ProfileKind.Step: Step, ProfileKind.Ramp: Ramp, ProfileKind.Pulse: Pulse}[kind]
    try:
        return cls(**values)
    except ValidationError as err:
        raise err.prefixed('profile') from None
    except TypeError as err:
        raise ValidationError('profile', f'missing field for {kind.value} profile ({err})') from None


def parse_calibration(section: dict, base: Path) -> CalibrationSpec:
    _check_keys(section, _CALIBRATION_KEYS, 'calibration')
    if 'free' not in section or not isinstance(section['free'], list) or not section['free']:
        raise ValidationError('calibration.free', 'a non-empty list of parameter names')
    free = tuple(enum_from_string(CalibratedParam, name, 'calibration.free') for name in section['free'])

    bounds_section = section.get('bounds', {})
    _check_keys(bounds_section, [p.value for p in free], 'calibration.bounds')
    bounds = []
    for param in free:
        key = f'calibration.bounds.{param.value}'
        if param.value not in bounds_section:
            raise ValidationError(key, 'required for every free parameter')
        pair = bounds_section[param.value]
        if not isinstance(pair, list) or len(pair) != 2:
            raise ValidationError(key, f'must be [lo, hi], got {pair!r}')
        bounds.append((_number(pair[0], key), _number(pair[1], key)))

    x0_section = section.get('x0', {})
    _check_keys(x0_section, [p.value for p in free], 'calibration.x0')
    x0 = tuple(_number(x0_section[p.value], f'calibration.x0.{p.value}') if p.value in x0_section
               else 0.5 * (lo + hi) for p, (lo, hi) in zip(free, bounds))

    weights = _vector3(section['weights'], 'calibration.weights') if 'weights' in section else (1.0, 1.0, 1.0)
    method = enum_from_string(FitMethod, section['method'], 'calibration.method') if 'method' in section \
        else FitMethod.NelderMead
    reference = _resolve(section['reference'], base, 'calibration.reference') if 'reference' in section else None
    return CalibrationSpec(free, tuple(bounds), x0, weights, method, reference)


def parse_config(path: Union[str, Path]) -> RunConfig:
    """
    read and validate a run configuration

    :param path: JSON file
    :return: RunConfig
    :raises OSError: if the file cannot be read
    :raises ParseError: malformed JSON, with line and column, or a file that is not UTF-8
    :raises ValidationError: key path (e.g. params.lc1) and the violated constraint
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except UnicodeDecodeError as err:
        raise ParseError(str(path), f'not UTF-8 text ({err.reason} at byte {err.start})') from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f'{path} line {err.lineno} column {err.colno}', err.msg) from None
    return config_from_dict(document, path.parent, source=path)


def config_from_dict(document: dict, base: Path, source: Optional[Path] = None) -> RunConfig:
    _check_keys(document, SECTIONS, '')
    if 'params' not in document:
        raise ValidationError('params', 'section is required')
    params = parse_params(document['params'])
    sim = parse_sim(document.get('sim', {}))
    profile = parse_profile(document['profile'], base) if 'profile' in document else Step(0.0)
    calibration = parse_calibration(document['calibration'], base) if 'calibration' in document else None
    return RunConfig(params, sim, profile, calibration, source)


def calibration_problem(config: RunConfig, reference: Optional[Union[str, Path]] = None) -> CalibrationProblem:
    """
    assemble the CalibrationProblem of a run configuration

    :param reference: reference CSV, overrides calibration.reference
    :raises ValidationError: if there is no calibration section or no reference
    :raises ParseError: if the reference file is malformed
    """
    spec = config.calibration
    if spec is None:
        raise ValidationError('calibration', 'section is required for calibration runs')
    reference = Path(reference) if reference is not None else spec.reference
    if reference is None:
        raise ValidationError('calibration.reference', 'no reference trajectory given (use --reference)')
    t, q = load_reference_csv(reference)
    try:
        return CalibrationProblem(t=t, q=q, free=spec.free, bounds=spec.bounds, fixed=config.params,
                                  profile=config.profile, sim=config.sim, weights=spec.weights)
    except ValidationError as err:
        raise err.prefixed('calibration') from None
