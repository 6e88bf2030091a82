"""Motor de ejecución de los barridos de propiedades."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import structlog

from src.checks.base import BaseCheck, BoundInstance, CheckContext, CheckResult, SimplexInstance

logger = structlog.get_logger()


@dataclass
class InstanceOutcome:
    """Resultado de todos los checks de una instancia."""

    instance_id: int
    results: dict[str, CheckResult] = field(default_factory=dict)
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def failed_checks(self) -> list[str]:
        return [name for name, r in self.results.items() if not r.success]

    @property
    def passed(self) -> bool:
        return not self.failed_checks


@dataclass
class SweepOutcome:
    instances: list[InstanceOutcome]

    @property
    def failures(self) -> list[tuple[int, str, str | None]]:
        """(instance_id, check, error) de cada check fallido, en orden de instancia."""
        return [
            (o.instance_id, name, o.results[name].error)
            for o in self.instances
            for name in o.failed_checks
        ]

    @property
    def passed(self) -> bool:
        return not self.failures


class SweepEngine:
    """Ejecuta una lista ordenada de checks sobre cada instancia de un barrido.

    Política de errores:
    - Si un check falla, se registra y se continúa con el siguiente.
    - Una excepción dentro de un check cuenta como fallo de ese check.
    - Las instancias se evalúan en paralelo (hasta `threads` hilos) pero los
      resultados se devuelven siempre en el orden de entrada.
    """

    def __init__(self, threads: int = 1) -> None:
        self._threads = max(1, threads)

    def run(
        self,
        instances: Sequence[SimplexInstance | BoundInstance],
        checks: Sequence[BaseCheck],
        sweep: str,
    ) -> SweepOutcome:
        log = logger.bind(sweep=sweep)
        log.info("sweep_started", instances=len(instances), checks=len(checks))

        if self._threads == 1 or len(instances) < 2:
            outcomes = [self._run_instance(inst, checks) for inst in instances]
        else:
            with ThreadPoolExecutor(max_workers=self._threads) as pool:
                outcomes = list(pool.map(lambda inst: self._run_instance(inst, checks), instances))

        outcome = SweepOutcome(instances=outcomes)
        if outcome.failures:
            log.warning("sweep_completed_with_failures", failures=len(outcome.failures))
        else:
            log.info("sweep_completed_successfully")
        return outcome

    def _run_instance(
        self,
        instance: SimplexInstance | BoundInstance,
        checks: Sequence[BaseCheck],
    ) -> InstanceOutcome:
        ctx = CheckContext(instance=instance)
        outcome = InstanceOutcome(instance_id=instance.instance_id)
        for check in checks:
            check_log = logger.bind(instance_id=instance.instance_id, check=check.name.value)
            try:
                result = check.run(ctx)
            except Exception as exc:
                # Error inesperado (no controlado por el check)
                check_log.error("check_exception", error=str(exc))
                result = CheckResult(success=False, error=f"Excepción no controlada: {exc}")
            if not result.success:
                check_log.warning("check_failed", error=result.error)
            outcome.results[check.name.value] = result
        outcome.data = ctx.data
        return outcome
