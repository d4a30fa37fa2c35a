"""The 8-device, 5-fog sample instance shipped with the package."""
from importlib import resources

from .instance import AllocationInstance, load_csv_instance


def _table(name: str) -> str:
    return resources.files("edgetree.allocator").joinpath("data", name).read_text()


def sample_instance(fixed_cost: float = 400.0, capacity: int = 3) -> AllocationInstance:
    inst = load_csv_instance(_table("sample_devfog.csv"), _table("sample_fogfog.csv"),
                             fixed_cost=fixed_cost, capacity=capacity)
    inst.devices = [d.replace("Device ", "D") for d in inst.devices]
    inst.fogs = [f.replace("Fog ", "F") for f in inst.fogs]
    return inst
