"""FastAPI application exposing the eta-hardy toolkit.

Reflection groups and signed chambers, eta-extension of functions and atoms,
the (eta, A/B)-atomic decomposition, BMO-type norms and maximal-function H^1
estimates over JSON.
"""

import sys
import time
from fractions import Fraction
from typing import Any, Dict, List, Optional

from fastapi import Depends, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from loguru import logger
from pydantic import BaseModel, Field

from adapters.serialization import (
    atom_list_from_dict,
    atom_list_to_dict,
    chamber_from_dict,
    chamber_to_dict,
    function_from_dict,
    function_to_dict,
    to_jsonable,
)
from atoms import decompose_eta, extend_atoms
from bmo import CubeFamily, bmo_norm, eta_bmo_norm, intrinsic_M1_M2
from config import RunConfig, load_run_config, parse_t_grid, settings
from errors import EtaHardyError, InvalidArgument
from geometry import EtaVector, SignedChamber, orthogonal_chamber
from gridfn import Box, PCFunction, eta_average, eta_extend
from kernels import h1_norm_estimate, h1_norm_whole_space
from validator import AtomValidator, ValidationMode

# Configure logging
logger.remove()
logger.add(sys.stdout, level=settings.app.log_level)
logger.add(settings.app.log_file, rotation="1 day", level="DEBUG")

VERSION = "1.0.0"

# Initialize FastAPI app
app = FastAPI(
    title="eta-hardy - Hardy and BMO spaces on Weyl chambers",
    description="Signed reflection groups, eta-atomic decompositions and BMO-type norms",
    version=VERSION,
    docs_url="/docs",
    redoc_url="/redoc"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Run configuration shared by every request
run_config: Optional[RunConfig] = None


# Pydantic models for request/response
class ChamberFields(BaseModel):
    """Either a root-system descriptor or an orthogonal R_k given by eta bits."""
    system: Optional[Dict[str, Any]] = Field(default=None, description="Root-system descriptor")
    dimension: Optional[int] = Field(default=None, description="Ambient dimension for R_k", ge=1, le=16)
    eta: Optional[List[int]] = Field(default=None, description="eta bits; 1 means the wall carries sign -1")


class GroupRequest(ChamberFields):
    elements: bool = Field(default=False, description="List every group element")


class ExtendRequest(ChamberFields):
    function: Optional[Dict[str, Any]] = Field(default=None, description="PCFunction supported in the chamber")
    atoms: Optional[Dict[str, Any]] = Field(default=None, description="AtomList of (eta, A/B)-atoms")
    average: bool = Field(default=False, description="Apply the eta-average instead of the extension")
    across: str = Field(default="all", description="all or minus", pattern="^(all|minus)$")


class DecomposeRequest(BaseModel):
    atoms: Dict[str, Any] = Field(..., description="AtomList of classical atoms")
    eta: List[int] = Field(..., description="eta bits")
    mode: str = Field(default="global", description="global or local", pattern="^(global|local)$")


class BmoNormRequest(ChamberFields):
    function: Dict[str, Any] = Field(..., description="PCFunction")
    flavor: str = Field(default="BMO*", description="BMO, BMO*, bmo or bmo*")
    break_point: Optional[str] = Field(default=None, description="Breaking point a (dyadic)")
    levels: Optional[int] = Field(default=None, description="Finest family level", ge=0, le=12)
    kappa: Optional[str] = Field(default=None, description="Adjacency slack")
    intrinsic: bool = Field(default=False, description="Report the intrinsic M1 and M2 quantities")
    mode: str = Field(default="global", description="global or local", pattern="^(global|local)$")


class H1NormRequest(ChamberFields):
    function: Dict[str, Any] = Field(..., description="PCFunction")
    mode: str = Field(default="heat", description="heat or poisson", pattern="^(heat|poisson)$")
    range: str = Field(default="global", description="global or local", pattern="^(global|local)$")
    t_grid: Optional[str] = Field(default=None, description="Time grid a:r:b")
    h: Optional[float] = Field(default=None, description="Lattice spacing", gt=0, le=1)
    window: Optional[int] = Field(default=None, description="Half side of the window", ge=1, le=64)
    whole_space: bool = Field(default=False, description="Also report the classical estimate of E_eta f")


class OperationResponse(BaseModel):
    success: bool
    execution_time_ms: int
    warnings: List[str] = []
    errors: List[str] = []
    metadata: Dict[str, Any] = {}


class GroupResponse(OperationResponse):
    chamber: Optional[Dict[str, Any]] = None


class ExtendResponse(OperationResponse):
    function: Optional[Dict[str, Any]] = None
    atoms: Optional[Dict[str, Any]] = None


class DecomposeResponse(OperationResponse):
    atoms: Optional[Dict[str, Any]] = None
    validation: Optional[Dict[str, Any]] = None


class NormResponse(OperationResponse):
    report: Optional[Dict[str, Any]] = None


class HealthResponse(BaseModel):
    """Response model for health check."""
    status: str
    timestamp: str
    components: Dict[str, str]
    issues: List[str] = []
    version: str = VERSION


@app.on_event("startup")
async def startup_event():
    global run_config
    logger.info("Starting eta-hardy service...")
    run_config = load_run_config(None)
    logger.info(f"Run configuration loaded (fingerprint {run_config.fingerprint()[:12]})")


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("eta-hardy service shutdown complete")


def get_run_config() -> RunConfig:
    if run_config is None:
        raise HTTPException(status_code=503, detail="Run configuration not initialized")
    return run_config


def _elapsed(start_time: float) -> int:
    return int((time.time() - start_time) * 1000)


def _metadata(run: RunConfig, **extra: Any) -> Dict[str, Any]:
    return {"fingerprint": run.fingerprint(), **to_jsonable(extra)}


def _chamber(request: ChamberFields, dimension: Optional[int] = None) -> SignedChamber:
    if request.system is not None:
        data = dict(request.system)
        if request.eta is not None:
            data["eta"] = list(EtaVector.parse(request.eta).signs)
        return chamber_from_dict(data)
    if request.eta is None:
        raise InvalidArgument("Give a root-system descriptor or eta bits")
    eta = EtaVector.parse(request.eta)
    d = request.dimension or dimension
    if d is None:
        raise InvalidArgument("eta bits without a descriptor need a dimension")
    return orthogonal_chamber(d, eta.k, eta.bits)


def _load_function(data: Dict[str, Any], run: RunConfig) -> PCFunction:
    f = function_from_dict(data)
    return f.as_float() if run.value_mode == "float" else f


def _reject(e: EtaHardyError) -> HTTPException:
    logger.warning(f"API: {e.kind}: {e}")
    return HTTPException(status_code=e.status_code, detail=e.to_dict())


# API endpoints
@app.get("/", response_model=Dict[str, str])
async def root():
    """Root endpoint with service information."""
    return {
        "service": "eta-hardy - Hardy and BMO spaces on Weyl chambers",
        "version": VERSION,
        "description": "Signed reflection groups, eta-atomic decompositions and BMO-type norms",
        "docs": "/docs",
        "health": "/health"
    }


@app.get("/health", response_model=HealthResponse)
async def health_check(run: RunConfig = Depends(get_run_config)):
    """Generates a small group as a smoke test."""
    components: Dict[str, str] = {"config": "healthy"}
    issues: List[str] = []
    try:
        order = orthogonal_chamber(2, 2, (1, 0)).order
        components["geometry"] = "healthy" if order == 4 else "degraded"
        if order != 4:
            issues.append(f"R_2 group has order {order}, expected 4")
    except Exception as e:
        logger.error(f"Health check failed: {e}")
        components["geometry"] = "unhealthy"
        issues.append(str(e))
    status = "healthy" if not issues else "unhealthy"
    return HealthResponse(
        status=status,
        timestamp=time.strftime("%Y-%m-%d %H:%M:%S"),
        components=components,
        issues=issues
    )


@app.post("/group", response_model=GroupResponse)
async def group(request: GroupRequest, run: RunConfig = Depends(get_run_config)):
    """Generate the reflection group and its signed chamber."""
    start_time = time.time()
    try:
        chamber = _chamber(request)
        logger.info(f"API: group of order {chamber.order} in dimension {chamber.dimension}")
        return GroupResponse(
            success=True,
            execution_time_ms=_elapsed(start_time),
            chamber=to_jsonable(chamber_to_dict(chamber, elements=request.elements)),
            metadata=_metadata(run)
        )
    except EtaHardyError as e:
        raise _reject(e)
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error in group generation: {e}")
        return GroupResponse(success=False, execution_time_ms=_elapsed(start_time), errors=[str(e)])


@app.post("/extend", response_model=ExtendResponse)
async def extend(request: ExtendRequest, run: RunConfig = Depends(get_run_config)):
    """eta-extension or averaging of a function, or extension of (eta, A/B)-atoms."""
    start_time = time.time()
    try:
        if request.atoms is not None:
            atom_list = atom_list_from_dict(request.atoms)
            eta = EtaVector.parse(request.eta) if request.eta is not None else atom_list.eta
            if eta is None:
                raise InvalidArgument("Atom list carries no eta")
            extended = extend_atoms(atom_list, eta, across=request.across)
            return ExtendResponse(
                success=True,
                execution_time_ms=_elapsed(start_time),
                atoms=to_jsonable(atom_list_to_dict(extended)),
                metadata=_metadata(run, atoms_in=len(atom_list), atoms_out=len(extended))
            )
        if request.function is None:
            raise InvalidArgument("Give a function or an atom list")
        f = _load_function(request.function, run)
        chamber = _chamber(request, f.dimension)
        out = eta_average(f, chamber) if request.average else eta_extend(f, chamber)
        return ExtendResponse(
            success=True,
            execution_time_ms=_elapsed(start_time),
            function=to_jsonable(function_to_dict(out)),
            metadata=_metadata(run, order=chamber.order, cells=len(out))
        )
    except EtaHardyError as e:
        raise _reject(e)
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error in extension: {e}")
        return ExtendResponse(success=False, execution_time_ms=_elapsed(start_time), errors=[str(e)])


@app.post("/decompose", response_model=DecomposeResponse)
async def decompose(request: DecomposeRequest, run: RunConfig = Depends(get_run_config)):
    """Classical atoms in the plus-axes cone to (eta, A/B)-atoms, validated."""
    start_time = time.time()
    try:
        atom_list = atom_list_from_dict(request.atoms)
        result = decompose_eta(atom_list, EtaVector.parse(request.eta), mode=request.mode)
        report = AtomValidator(ValidationMode(request.mode)).validate_list(
            result.atoms, [c for c, _ in result.terms])
        ledger = result.ledger[-1] if result.ledger else {}
        logger.info(f"API: decomposition gave {len(result)} atoms, valid={report['valid']}")
        return DecomposeResponse(
            success=report["valid"],
            execution_time_ms=_elapsed(start_time),
            atoms=to_jsonable(atom_list_to_dict(result)),
            validation=to_jsonable({k: report[k] for k in ("valid", "first_invalid", "counts")}),
            warnings=[str(w) for w in report["warnings"]],
            errors=[str(e) for e in report["errors"]],
            metadata=_metadata(run, ratio=ledger.get("ratio"), bound=ledger.get("bound"), kinds=result.kinds())
        )
    except EtaHardyError as e:
        raise _reject(e)
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error in decomposition: {e}")
        return DecomposeResponse(success=False, execution_time_ms=_elapsed(start_time), errors=[str(e)])


@app.post("/bmo-norm", response_model=NormResponse)
async def bmo_norm_endpoint(request: BmoNormRequest, run: RunConfig = Depends(get_run_config)):
    """BMO-type norm, eta-norm or intrinsic M1/M2 over the cube family."""
    start_time = time.time()
    try:
        run = run.with_overrides(
            max_level=request.levels,
            break_point=float(Fraction(request.break_point)) if request.break_point else None,
            kappa=float(Fraction(request.kappa)) if request.kappa else None,
        )
        F = _load_function(request.function, run)
        family = CubeFamily(window=Box.window(run.window_half, F.dimension), max_level=run.max_level,
                            break_point=Fraction(run.break_point), kappa=Fraction(run.kappa))
        has_chamber = request.system is not None or request.eta is not None
        if request.intrinsic:
            report = intrinsic_M1_M2(F, _chamber(request, F.dimension), family, mode=request.mode)
        elif has_chamber:
            report = eta_bmo_norm(F, _chamber(request, F.dimension), family, flavor=request.flavor)
        else:
            report = bmo_norm(F, family, flavor=request.flavor)
        data = report.model_dump(mode="json")
        return NormResponse(
            success=True,
            execution_time_ms=_elapsed(start_time),
            report=data,
            warnings=list(data.get("warnings", [])),
            metadata=_metadata(run)
        )
    except EtaHardyError as e:
        raise _reject(e)
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error in BMO norm: {e}")
        return NormResponse(success=False, execution_time_ms=_elapsed(start_time), errors=[str(e)])


@app.post("/h1-norm", response_model=NormResponse)
async def h1_norm_endpoint(request: H1NormRequest, run: RunConfig = Depends(get_run_config)):
    """Maximal-function H^1 estimate on the chamber (or on the whole window without a chamber)."""
    start_time = time.time()
    try:
        run = run.with_overrides(
            window_half=request.window,
            h=request.h,
            t_grid=parse_t_grid(request.t_grid) if request.t_grid else None,
        )
        f = _load_function(request.function, run)
        window = Box.window(run.window_half, f.dimension)
        params = dict(mode=request.mode, range_=request.range, t_grid=run.t_grid, h=run.h, window=window)
        if request.system is None and request.eta is None:
            report = h1_norm_whole_space(f, **params).to_dict()
        else:
            chamber = _chamber(request, f.dimension)
            report = h1_norm_estimate(f, chamber, **params).to_dict()
            if request.whole_space:
                whole = h1_norm_whole_space(eta_extend(f, chamber), **params)
                report["whole_space"] = whole.to_dict()
                report["whole_space_over_order"] = whole.value / chamber.order
        return NormResponse(
            success=True,
            execution_time_ms=_elapsed(start_time),
            report=to_jsonable(report),
            metadata=_metadata(run)
        )
    except EtaHardyError as e:
        raise _reject(e)
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error in H1 estimate: {e}")
        return NormResponse(success=False, execution_time_ms=_elapsed(start_time), errors=[str(e)])


# Error handlers
@app.exception_handler(HTTPException)
async def http_exception_handler(request, exc):
    """Handle HTTP exceptions."""
    return JSONResponse(
        status_code=exc.status_code,
        content={
            "success": False,
            "error": exc.detail,
            "status_code": exc.status_code
        }
    )


@app.exception_handler(Exception)
async def general_exception_handler(request, exc):
    """Handle general exceptions."""
    logger.error(f"Unhandled exception: {exc}")
    return JSONResponse(
        status_code=500,
        content={
            "success": False,
            "error": "Internal server error",
            "status_code": 500
        }
    )


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app:app",
        host=settings.app.host,
        port=settings.app.port,
        reload=settings.app.debug,
        log_level=settings.app.log_level.lower()
    )
