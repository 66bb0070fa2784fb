from typing import Any, Dict, List, Optional, TypedDict


class AInftyEstimate(TypedDict):
    constant: float
    delta: float
    witness_cube: Any
    witness_mask: Any


class TwoWeightReport(TypedDict):
    K: float
    p: float
    q: float
    alpha: float
    cube: Any


class ConditionReport(TypedDict):
    kind: str
    constant: float
    parameters: Dict[str, Any]
    witness: Dict[str, Any]
    flagged: List[Dict[str, Any]]


class InstanceResult(TypedDict):
    label: str
    status: str
    passed: bool
    lhs: float
    rhs: float
    constant: Optional[float]
    measured: Optional[float]
    witness: Dict[str, Any]
    details: Dict[str, Any]


class VerificationReport(TypedDict):
    theorem: str
    passed: bool
    instances: List[InstanceResult]
    summary: Dict[str, Any]
    environment: Dict[str, Any]


class EdgeFactor(TypedDict):
    cube: int
    parent: int
    lam: float
    overlap_side: float


def instance_result(label: str, passed: bool, lhs: float, rhs: float, constant: Optional[float] = None,
                    measured: Optional[float] = None, witness: Optional[Dict[str, Any]] = None,
                    details: Optional[Dict[str, Any]] = None, status: Optional[str] = None) -> InstanceResult:
    return InstanceResult(label=label, status=status or ('pass' if passed else 'fail'), passed=bool(passed),
                          lhs=float(lhs), rhs=float(rhs), constant=constant, measured=measured,
                          witness=witness or {}, details=details or {})


def verification_report(theorem: str, instances: List[InstanceResult], summary: Optional[Dict[str, Any]] = None,
                        environment: Optional[Dict[str, Any]] = None) -> VerificationReport:
    return VerificationReport(theorem=theorem, passed=all(instance['passed'] for instance in instances),
                              instances=instances, summary=summary or {}, environment=environment or {})
