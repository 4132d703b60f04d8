# This code is part of optotherm and is licensed under the MIT license.
"""Dependency graph of sweep units and its local execution."""
from __future__ import annotations

import logging
from typing import Any, Optional, Union

import networkx as nx
from joblib import Parallel, delayed

from ..errors import UpstreamFailureError
from ..tokenization import Tokenizable, TokenizableKey
from .units import SweepUnit, UnitFailure, UnitResult

logger = logging.getLogger(__name__)


class DAGMixin:
    _units: list[SweepUnit]
    _name: Optional[str]
    _graph: nx.DiGraph

    @staticmethod
    def _build_graph(nodes) -> nx.DiGraph:
        """Dependency DAG with an edge from each unit to each dependency"""
        G = nx.DiGraph()
        for node in nodes:
            G.add_node(node)
            for dep in node.dependencies:
                G.add_edge(node, dep)
        return G

    @staticmethod
    def _iterate_dag_order(graph):
        return reversed(
            list(nx.lexicographical_topological_sort(graph,
                                                     key=lambda u: u.key))
        )

    @property
    def name(self) -> Optional[str]:
        return self._name

    @property
    def graph(self) -> nx.DiGraph:
        """DAG of `SweepUnit` nodes with edges denoting dependencies."""
        return self._graph

    @property
    def units(self) -> list[SweepUnit]:
        """Units in dependency order: every unit follows its dependencies"""
        return list(self._iterate_dag_order(self._graph))

    def generations(self) -> list[list[SweepUnit]]:
        """Groups of mutually independent units, in execution order.

        Each group is sorted by key so that execution order never depends on
        set iteration.
        """
        return [sorted(gen, key=lambda u: u.key)
                for gen in nx.topological_generations(self._graph.reverse())]


class SweepDAG(Tokenizable, DAGMixin):
    """An executable set of sweep units."""
    def __init__(self, *, units: list[SweepUnit], name: Optional[str] = None):
        self._units = list(units)
        self._name = name
        self._graph = self._build_graph(self._units)
        if not nx.is_directed_acyclic_graph(self._graph):
            raise ValueError("sweep units contain a dependency cycle")

    @classmethod
    def _defaults(cls):
        return {}

    def _to_dict(self):
        return {'units': self.units, 'name': self._name}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)


class SweepDAGResult(Tokenizable, DAGMixin):
    """Results of executing every unit of a :class:`SweepDAG`."""
    def __init__(self, *, units: list[SweepUnit], results: list[UnitResult],
                 name: Optional[str] = None):
        self._units = list(units)
        self._results = list(results)
        self._name = name
        self._graph = self._build_graph(self._units)
        self._by_source = {r.source_key: r for r in self._results}

    @classmethod
    def _defaults(cls):
        return {}

    def _to_dict(self):
        return {'units': self.units, 'results': self._results,
                'name': self._name}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)

    @property
    def results(self) -> list[UnitResult]:
        return list(self._results)

    @property
    def failures(self) -> list[UnitFailure]:
        return [r for r in self._results if not r.ok()]

    def unit_to_result(self, unit: SweepUnit) -> UnitResult:
        """The result produced by ``unit``

        Raises
        ------
        KeyError
            if ``unit`` was not executed as part of this DAG
        """
        try:
            return self._by_source[unit.key]
        except KeyError:
            raise KeyError(f"no result for unit {unit.name}") from None

    def ok(self) -> bool:
        return not self.failures


def _pu_to_pur(inputs: Union[dict[str, Any], list[Any], SweepUnit],
               mapping: dict[TokenizableKey, UnitResult]):
    """Replace each `SweepUnit` within ``inputs`` by its `UnitResult`"""
    if isinstance(inputs, dict):
        return {key: _pu_to_pur(value, mapping) for key, value in inputs.items()}
    elif isinstance(inputs, list):
        return [_pu_to_pur(value, mapping) for value in inputs]
    elif isinstance(inputs, SweepUnit):
        return mapping[inputs.key]
    else:
        return inputs


def _skipped(unit: SweepUnit, failed: list[UnitResult]) -> UnitFailure:
    names = ', '.join(str(r.name) for r in failed)
    return UnitFailure(
        name=unit.name,
        source_key=unit.key,
        exception=(UpstreamFailureError.__qualname__,
                   (f"skipped after failure of: {names}",)),
        traceback="",
    )


def execute_dag(dag: SweepDAG, *, n_jobs: int = 1,
                raise_error: bool = False) -> SweepDAGResult:
    """Execute every unit of ``dag`` locally.

    Units of one topological generation run concurrently on ``n_jobs``
    threads. A unit whose dependencies failed is recorded as an
    `UpstreamFailureError` failure unless it tolerates failures.

    Parameters
    ----------
    dag : SweepDAG
    n_jobs : int
        worker threads per generation
    raise_error : bool
        re-raise the first unit exception instead of recording it
    """
    results: dict[TokenizableKey, UnitResult] = {}
    for generation in dag.generations():
        runnable = []
        for unit in generation:
            failed = [results[d.key] for d in unit.dependencies
                      if not results[d.key].ok()]
            if failed and not unit.tolerates_failures:
                results[unit.key] = _skipped(unit, failed)
            else:
                runnable.append(unit)

        outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(unit.execute)(raise_error=raise_error,
                                  **_pu_to_pur(unit.inputs, results))
            for unit in runnable
        )
        for unit, outcome in zip(runnable, outcomes):
            results[unit.key] = outcome
        logger.debug("executed %d units, %d skipped", len(runnable),
                     len(generation) - len(runnable))

    ordered = [results[unit.key] for unit in dag.units]
    return SweepDAGResult(units=dag.units, results=ordered, name=dag.name)
