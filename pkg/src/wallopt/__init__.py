"""Wall layer thickness optimisation for thermal comfort in free-running houses."""

from .building import Building, OccupancySchedule, Zone, default_reunion_house, internal_gains, occupied_fraction
from .comfort import ComfortParams, IndoorCondition, PMVResult, pmv, ppd, sensation
from .materials import Layer, Material, WallAssembly, baseline_reunion_wall, conduction_resistance, u_value, with_layer_thickness
from .objective import ZoneWeights, paper_weights, total_pmv, zone_mean_pmv
from .optimizer import OptimizerConfig, ParamSpec, map_params, optimize
from .thermal_sim import SimConfig, simulate
from .weather import WeatherSeries, parse_weather_csv, synthetic_tropical

__version__ = "0.1.0"
