#!/usr/bin/env python3
"""
ptgain command line: figure-reproduction runs for the optomechanical gain,
PT dimer, OMIT and entanglement models.

Every subcommand reads a preset and/or a JSON scenario, writes CSV tables and
a summary.json into the output directory, and exits with 0 on success, 1 on a
bad scenario or an unwritable output directory and 2 on a numerical failure.
"""

import argparse
import contextlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, Dict, Tuple

import numpy as np
import pandas as pd

import elimination
import entanglement
import moments
import omit
import oracle
import ptcore
import scenarios
from errors import NumericalError, ScenarioError
from params import InitialMoments, effective_params

logger = logging.getLogger('ptgain')

FLOAT_FORMAT = '%.12g'
ORACLE_TOL = 1e-3

Outputs = Dict[str, pd.DataFrame]


# ======================================================================
# 1) Subcommands
# ======================================================================

def run_gain_sweep(config: dict, pool: ThreadPoolExecutor) -> Tuple[Outputs, dict]:
    """Gamma_eff/gamma and omega_eff over G for the detuning family."""
    g_grid = np.linspace(scenarios.number(config, 'g_min'), scenarios.number(config, 'g_max'),
                         scenarios.integer(config, 'g_points', minimum=2))
    curves, couplings = elimination.gain_family(
        g_grid, deltas=scenarios.number_list(config, 'deltas'),
        gammas=scenarios.number_list(config, 'gammas'),
        omega_m=scenarios.number(config, 'omega_m'), kappa=scenarios.number(config, 'kappa'),
        n_th=scenarios.number(config, 'n_th'))
    summary = {'couplings': couplings.to_dict(orient='records')}
    if all(config[k] is not None for k in ('gamma', 'delta', 'g_lin')):
        eff = effective_params(scenarios.system_params(config))
        summary.update(gamma_eff=eff.gamma_eff, omega_eff=eff.omega_eff,
                       n_th_eff=eff.n_th_eff, heating_rate=eff.heating_rate)
    return {'gain_sweep.csv': curves, 'couplings.csv': couplings}, summary


def run_evolve(config: dict, pool: ThreadPoolExecutor) -> Tuple[Outputs, dict]:
    """Full vs eliminated trajectories, fidelity trace and optional fidelity sweeps."""
    p = scenarios.system_params(config)
    init = scenarios.initial_moments(config)
    t_end, dt = scenarios.number(config, 't_end'), scenarios.number(config, 'dt')
    every = scenarios.integer(config, 'sample_every')
    transient = scenarios.number(config, 'transient')

    run = elimination.compare_models(p, init, t_end, dt, every, transient)
    frame = run.to_frame()
    late = frame['t'] >= transient
    deviation = (frame['n_b'] - frame['n_b_eff']).abs() / np.maximum(1.0, frame['n_b'])
    outputs = {'trajectory.csv': frame, 'fidelity.csv': frame[['t', 'F']]}
    summary = {
        'gamma_eff': run.eff.gamma_eff, 'omega_eff': run.eff.omega_eff,
        'n_th_eff': run.eff.n_th_eff, 'heating_rate': run.eff.heating_rate,
        'average_fidelity': run.average_fidelity,
        'max_n_b_deviation': float(deviation[late].max()) if late.any() else None,
    }

    jobs = [('g_lin', g, p.with_coupling(g)) for g in scenarios.number_list(config, 'fidelity_g_grid')]
    jobs += [('delta', d, replace(p, delta=d)) for d in scenarios.number_list(config, 'fidelity_delta_grid')]
    if jobs:
        averages = pool.map(
            lambda job: elimination.average_fidelity(job[2], init, t_end, dt, every, transient), jobs)
        outputs['fidelity_sweep.csv'] = pd.DataFrame(
            [{'parameter': name, 'value': value, 'F_avg': f} for (name, value, _), f in zip(jobs, averages)])
    return outputs, summary


def run_pt_spectrum(config: dict, pool: ThreadPoolExecutor) -> Tuple[Outputs, dict]:
    p = scenarios.dimer_params(config)
    grid = np.linspace(scenarios.number(config, 'mu_min'), scenarios.number(config, 'mu_max'),
                       scenarios.integer(config, 'mu_points'))
    spectra = ptcore.sweep(p, grid)
    summary = {'mu_ep': ptcore.exceptional_point(p),
               'effective_dissipation': ptcore.effective_dissipation(p),
               'max_direct_error': max(s.direct_error for s in spectra)}
    return {'spectrum.csv': ptcore.to_frame(spectra)}, summary


def run_omit(config: dict, pool: ThreadPoolExecutor) -> Tuple[Outputs, dict]:
    """Probe spectrum, window metrics, required couplings and the depth map."""
    p = scenarios.omit_params(config)
    probe = np.linspace(scenarios.number(config, 'probe_min'), scenarios.number(config, 'probe_max'),
                        scenarios.integer(config, 'probe_points', minimum=3))
    target = scenarios.number(config, 'target_depth')
    g_hi = scenarios.number(config, 'g_hi')

    a0, q0, beta = omit.steady_state(p)
    window = omit.spectrum(p, omit.window_grid(p))
    with_gain, without_gain = pool.map(lambda q: omit.required_coupling(q, target, g_hi),
                                       [p, replace(p, gamma_gain=0.0)])
    outputs = {'omit_spectrum.csv': omit.to_frame(omit.spectrum(p, probe))}
    summary = {
        're_a0': a0.real, 'im_a0': a0.imag, 'q0': q0, 're_beta': beta.real, 'im_beta': beta.imag,
        'gamma_m': p.gamma_m, 'depth': omit.window_depth(window),
        'window_center': omit.window_center(window),
        'target_depth': target, 'g0_required': with_gain, 'g0_required_without_gain': without_gain,
        'coupling_ratio': without_gain / with_gain,
    }

    g0_grid = scenarios.number_list(config, 'g0_grid')
    gamma_m_grid = scenarios.number_list(config, 'gamma_m_grid')
    if g0_grid and gamma_m_grid:
        maps = pool.map(lambda gm: omit.depth_map(p, g0_grid, [gm]), gamma_m_grid)
        outputs['depth_map.csv'] = pd.concat(list(maps), ignore_index=True)
    return outputs, summary


def _encode_death(t_s: float) -> float:
    return -1.0 if math.isinf(t_s) else t_s


def run_entangle(config: dict, pool: ThreadPoolExecutor) -> Tuple[Outputs, dict]:
    """E_n(t) of the preset dimer and the gamma_eff sweep."""
    p = scenarios.dimer_params(config)
    start = entanglement.tmsv_initial(scenarios.number(config, 'r'))
    t_end, dt = scenarios.number(config, 't_end'), scenarios.number(config, 'dt')
    every = scenarios.integer(config, 'sample_every')

    times, values = entanglement.negativity_trace(p, start, t_end, dt, every)
    outputs = {'negativity.csv': pd.DataFrame({'t': times, 'En': values})}
    death = entanglement.death_time(times, values, horizon=entanglement.AVERAGE_HORIZON)
    summary = {
        'gamma_eff': ptcore.effective_dissipation(p),
        'completely_positive': p.completely_positive,
        'En_initial': float(values[0]),
        'En_avg': entanglement.time_avg(times, values, min(t_end, entanglement.AVERAGE_HORIZON)),
        'T_s': _encode_death(death),
    }
    grid = scenarios.number_list(config, 'gamma_eff_grid')
    if grid:
        sweep = entanglement.gamma_eff_sweep(p, start, grid, t_end, dt, every, map_fn=pool.map)
        sweep['T_s'] = sweep['T_s'].map(_encode_death)
        outputs['negativity_sweep.csv'] = sweep
    return outputs, summary


def _optomech_check(config: dict) -> Tuple[pd.DataFrame, Dict[str, float]]:
    p = scenarios.system_params(config)
    beta = complex(scenarios.number(config, 'beta'))
    cfg = oracle.FockConfig(scenarios.integer(config, 'cutoff_a', 2),
                            scenarios.integer(config, 'cutoff_b', 2), 'optomech')
    t_end, dt = scenarios.number(config, 'optomech_t_end'), scenarios.number(config, 'dt')
    every = scenarios.integer(config, 'sample_every')

    rho0 = oracle.product_state(oracle.thermal(0.0, cfg.cutoff_a), oracle.coherent(beta, cfg.cutoff_b))
    init = InitialMoments(b_mean=beta, n_b=abs(beta) ** 2, bb=beta * beta)
    reference = oracle.fock_evolve(cfg, p, rho0, t_end, dt, every)
    engine = moments.evolve(p, moments.MomentState.from_initial(init), t_end, dt, every).to_frame()
    return reference, oracle.compare(reference, engine)


def _dimer_check(config: dict) -> Tuple[pd.DataFrame, Dict[str, float]]:
    p = scenarios.dimer_params(config)
    r = scenarios.number(config, 'r')
    n = scenarios.integer(config, 'cutoff_dimer', 2)
    cfg = oracle.FockConfig(n, n, 'dimer')
    t_end, dt = scenarios.number(config, 'dimer_t_end'), scenarios.number(config, 'dt')
    every = scenarios.integer(config, 'sample_every')

    reference = oracle.fock_evolve(cfg, p, oracle.tmsv_density(r, n), t_end, dt, every)
    states = entanglement.evolve_dimer(p, entanglement.tmsv_initial(r), t_end, dt, every)
    engine = pd.DataFrame([oracle.dimer_row(s) for s in states])
    return reference, oracle.compare(reference, engine)


def run_oracle_check(config: dict, pool: ThreadPoolExecutor) -> Tuple[Outputs, dict]:
    """Moment engines against the Fock-space reference on small instances."""
    (opto_trace, opto_dev), (dimer_trace, dimer_dev) = pool.map(
        lambda check: check(config), [_optomech_check, _dimer_check])
    worst = max(list(opto_dev.values()) + list(dimer_dev.values()))
    summary = {'optomech': opto_dev, 'dimer': dimer_dev, 'max_deviation': worst,
               'tolerance': ORACLE_TOL, 'passed': worst <= ORACLE_TOL}
    return {'oracle_optomech.csv': opto_trace, 'oracle_dimer.csv': dimer_trace}, summary


RUNNERS: Dict[str, Callable] = {
    'gain-sweep': run_gain_sweep,
    'evolve': run_evolve,
    'pt-spectrum': run_pt_spectrum,
    'omit': run_omit,
    'entangle': run_entangle,
    'oracle-check': run_oracle_check,
}


# ======================================================================
# 2) Output
# ======================================================================

def _staged(out_dir: str, name: str) -> str:
    return os.path.join(out_dir, f".{name}.partial")


def write_outputs(out_dir: str, outputs: Outputs, summary: dict) -> None:
    """Write every table and summary.json; called only once a run has fully succeeded.

    Files are written under staging names and renamed once all of them are on
    disk. On an OSError the staged files are removed and the error re-raised.
    """
    os.makedirs(out_dir, exist_ok=True)
    names = list(outputs) + ['summary.json']
    written = []
    try:
        for name, frame in outputs.items():
            written.append(name)
            frame.to_csv(_staged(out_dir, name), index=False, float_format=FLOAT_FORMAT)
        written.append('summary.json')
        with open(_staged(out_dir, 'summary.json'), 'w', encoding='utf-8') as f:
            json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
            f.write('\n')
    except OSError:
        for name in written:
            with contextlib.suppress(OSError):
                os.remove(_staged(out_dir, name))
        raise
    for name in names:
        os.replace(_staged(out_dir, name), os.path.join(out_dir, name))
    for name, frame in outputs.items():
        logger.info("Wrote %s (%d rows)", name, len(frame))


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return None
        return -1.0 if math.isinf(v) else float(FLOAT_FORMAT % v)
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


# ======================================================================
# 3) Entry point
# ======================================================================

def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog='ptgain',
        description="Quantum gain, PT dimer, OMIT and entanglement simulations.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument('command', choices=sorted(RUNNERS),
                        help="Which figure family to compute.")
    parser.add_argument('--preset', choices=scenarios.PRESETS, default=None,
                        help="Named preset; each command has its own default.")
    parser.add_argument('--scenario', default=None,
                        help="JSON scenario file overriding preset keys.")
    parser.add_argument('--out', default=scenarios.env_out_dir(),
                        help="Output directory (PTGAIN_OUT).")
    parser.add_argument('--threads', type=int, default=None,
                        help="Worker threads for sweeps (PTGAIN_THREADS, else CPU count).")
    parser.add_argument('--log-level', default=scenarios.env_log_level(),
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'),
                        help="Logging level (PTGAIN_LOG_LEVEL).")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=args.log_level,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        threads = args.threads if args.threads is not None else scenarios.env_threads()
        if threads < 1:
            raise ScenarioError(f"--threads must be >= 1, got {threads}")
        config = scenarios.resolve(args.command, args.preset, args.scenario)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs, summary = RUNNERS[args.command](config, pool)
    except ScenarioError as e:
        logger.error("Scenario error: %s", e)
        return 1
    except NumericalError as e:
        where = f" (t={e.time:g})" if e.time is not None else ""
        logger.error("Numerical failure%s: %s", where, e)
        return 2

    try:
        write_outputs(args.out, outputs, summary)
    except OSError as e:
        logger.error("Cannot write outputs to %s: %s", args.out, e)
        return 1
    if summary.get('passed') is False:
        logger.error("Oracle deviation %.3e exceeds %.1e", summary['max_deviation'], ORACLE_TOL)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
