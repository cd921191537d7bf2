from flask import Blueprint, request
from pydantic import ValidationError

from models.report import FitFormulaParams
from models.requests import FitFormulaRequest, MeanfieldRequest
from models.system import SystemSpec
from services.frequency_service import FrequencyService, calibrate_fit_formula, fit_formula_curve
from utils.errors import SimulationError
from utils.helpers import create_error_response, create_success_response

frequencies_bp = Blueprint('frequencies', __name__)

MAX_GAP_BASIS_SIZE = 600


def _system_from_args():
    fields = {}
    for name, cast in (('dimension', int), ('coupling', float), ('softening', float),
                       ('interaction_exponent', float)):
        value = request.args.get(name)
        if value not in (None, ""):
            fields[name] = cast(value)
    if request.args.get('symmetry'):
        fields['symmetry'] = request.args['symmetry']
    return SystemSpec(**fields)


@frequencies_bp.route('/frequencies/classical', methods=['GET'])
def classical_frequency():
    """
    Classical small-oscillation frequency of the relative motion
    ---
    tags:
      - Frequencies
    parameters:
      - in: query
        name: coupling
        type: number
        required: true
        example: 10
      - in: query
        name: softening
        type: number
        default: 0
      - in: query
        name: interaction_exponent
        type: number
        default: 1
    responses:
      200:
        description: Frequency and equilibrium separation
      400:
        description: No interaction-stabilized minimum
    """
    try:
        spec = _system_from_args()
        return create_success_response(FrequencyService(spec).classical())

    except ValidationError as e:
        return create_error_response(f"Validation error: {e}")
    except ValueError as e:
        return create_error_response(str(e))
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)


@frequencies_bp.route('/frequencies/gap', methods=['GET'])
def gap_frequency():
    """
    Relative breathing frequency from exact diagonalization
    ---
    tags:
      - Frequencies
    parameters:
      - in: query
        name: dimension
        type: integer
        enum: [1, 2]
        default: 1
      - in: query
        name: coupling
        type: number
        default: 0
      - in: query
        name: symmetry
        type: string
        enum: ["symmetric", "antisymmetric"]
        default: antisymmetric
      - in: query
        name: softening
        type: number
        default: 0
      - in: query
        name: basis_size
        type: integer
        default: 200
    responses:
      200:
        description: E2 - E0 of the relative sector
      400:
        description: Invalid system or basis size
      422:
        description: Numerical failure
    """
    try:
        spec = _system_from_args()
        basis_size = request.args.get('basis_size')
        basis_size = int(basis_size) if basis_size else None
        if basis_size is not None and not 2 <= basis_size <= MAX_GAP_BASIS_SIZE:
            return create_error_response(f"basis_size must lie in [2, {MAX_GAP_BASIS_SIZE}]")
        return create_success_response(FrequencyService(spec).gap(basis_size))

    except ValidationError as e:
        return create_error_response(f"Validation error: {e}")
    except ValueError as e:
        return create_error_response(str(e))
    except SimulationError as e:
        return create_error_response(str(e), 422)
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)


@frequencies_bp.route('/frequencies/meanfield', methods=['POST'])
def meanfield_frequency():
    """
    Hartree or semiclassical estimate of the relative breathing frequency
    ---
    tags:
      - Frequencies
    parameters:
      - in: body
        name: request
        required: true
        schema:
          type: object
          properties:
            model:
              type: string
              enum: ["hartree", "semiclassical"]
            system:
              type: object
              properties:
                dimension:
                  type: integer
                  example: 1
                coupling:
                  type: number
                  example: 0.2
                symmetry:
                  type: string
                  example: "antisymmetric"
    responses:
      200:
        description: Report plus the quantities the model is built from
      400:
        description: Invalid input data
      422:
        description: Model has no solution at this coupling
    """
    try:
        data = request.get_json(silent=True)
        if not data:
            return create_error_response("Request body is required")

        body = MeanfieldRequest(**data)
        return create_success_response(FrequencyService(body.system).meanfield(body.model))

    except ValidationError as e:
        return create_error_response(f"Validation error: {e}")
    except ValueError as e:
        return create_error_response(str(e))
    except SimulationError as e:
        return create_error_response(str(e), 422)
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)


@frequencies_bp.route('/frequencies/fit-formula', methods=['POST'])
def fit_formula():
    """
    Evaluate or calibrate the closed-form interpolation of omega_r(lambda)
    ---
    tags:
      - Frequencies
    parameters:
      - in: body
        name: request
        required: true
        schema:
          type: object
          properties:
            b:
              type: number
              example: 0.5
            c:
              type: number
              example: -0.3
            couplings:
              type: array
              items:
                type: number
              example: [0, 1, 10]
            points:
              type: array
              description: (lambda, omega_r) pairs; when given, (b, c) are calibrated on them
              items:
                type: array
                items:
                  type: number
    responses:
      200:
        description: Parameters and evaluated curve
      400:
        description: Invalid input data
      422:
        description: Calibration did not converge
    """
    try:
        data = request.get_json(silent=True)
        if not data:
            return create_error_response("Request body is required")

        body = FitFormulaRequest(**data)
        if body.points:
            result = calibrate_fit_formula(body.points)
            params = FitFormulaParams(**{k: result["params"][k] for k in ("b", "c")})
        else:
            params = FitFormulaParams(b=body.b, c=body.c)
            result = {"params": params.model_dump(mode="json")}
        couplings = body.couplings or [p[0] for p in body.points]
        result["curve"] = fit_formula_curve(params, couplings)
        return create_success_response(result)

    except ValidationError as e:
        return create_error_response(f"Validation error: {e}")
    except ValueError as e:
        return create_error_response(str(e))
    except SimulationError as e:
        return create_error_response(str(e), 422)
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)
