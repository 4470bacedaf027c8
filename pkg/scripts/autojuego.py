#!/usr/bin/env python3
"""
Script de autojuego: orquestador y servicios de referencia en un solo proceso.

Uso:
    python scripts/autojuego.py
    python scripts/autojuego.py --config MAJ/DIST --politica uniform
    python scripts/autojuego.py --comportamientos alice-greedy bob --config MAJ/CENT
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH
root_dir = Path(__file__).parent.parent
sys.path.insert(0, str(root_dir))

import asyncio
import argparse

from src.core import configurar_logging
from src.model.protocol import Configuration
from src.model.semantics import replay_service_projection
from src.runtime.contract import load_contract
from src.runtime.orchestrator import ChoicePolicy, Endpoint, run_orchestrator
from src.runtime.service import load_behaviour, run_service


async def autojuego(contrato: str, config: str, comportamientos: list, politica: str, seed: int):
    """Levanta un servicio por comportamiento en puertos efímeros y los orquesta."""
    loop = asyncio.get_running_loop()
    configuracion = Configuration.parse(config)
    puertos = [loop.create_future() for _ in comportamientos]
    servicios = [
        asyncio.create_task(
            run_service(0, load_behaviour(nombre), configuracion, accept_deadline=10.0, on_listening=p.set_result)
        )
        for nombre, p in zip(comportamientos, puertos)
    ]
    endpoints = [Endpoint("127.0.0.1", await p) for p in puertos]

    print("="*80)
    print(f"AUTOJUEGO {configuracion} - contrato {contrato}")
    print("="*80)
    print()

    reporte, *reportes = await asyncio.gather(
        run_orchestrator(load_contract(contrato), endpoints, configuracion, ChoicePolicy.parse(politica, seed), seed),
        *servicios,
        return_exceptions=True,
    )
    if isinstance(reporte, BaseException):
        print(f"✗ Orquestación abortada: {type(reporte).__name__}: {reporte}")
    else:
        print(f"{'#':<4} {'Etiqueta':<30}")
        print("-"*80)
        for k, label in enumerate(reporte.labels, start=1):
            print(f"{k:<4} {label:<30}")
        print(f"\nEstado final: {reporte.final_state} ({'STOP' if reporte.stopped else 'sin STOP'})")
        print()
        for c in reporte.choices:
            votos = f" votos={','.join(c.votes)}" if c.votes else ""
            print(f"  choice en {c.state}: {c.chosen}{votos}")

    print()
    print(f"{'Servicio':<10} {'Estado':<12} {'Mensajes':>9} {'Proyección':>14}")
    print("-"*80)
    for k, (nombre, r) in enumerate(zip(comportamientos, reportes)):
        if isinstance(r, BaseException):
            print(f"svc{k:<7} {type(r).__name__:<12}")
            continue
        fin = replay_service_projection(r.events(), configuracion).name
        print(f"svc{k:<7} {r.status:<12} {len(r.transcript):>9} {fin:>14}  ({nombre})")
    print("="*80)


def main():
    parser = argparse.ArgumentParser(description='Autojuego del orquestador con servicios de referencia')
    parser.add_argument('--contrato', type=str, default='cafe')
    parser.add_argument('--config', type=str, default='DICT/CENT')
    parser.add_argument('--comportamientos', nargs='+', default=['alice', 'bob'])
    parser.add_argument('--politica', type=str, default='scripted:(!euro,-)|STOP')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--log-level', type=str, default='WARNING')
    args = parser.parse_args()

    configurar_logging(args.log_level)
    asyncio.run(autojuego(args.contrato, args.config, args.comportamientos, args.politica, args.seed))


if __name__ == "__main__":
    main()
