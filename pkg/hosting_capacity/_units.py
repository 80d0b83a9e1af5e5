# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Per-unit system of a feeder.

All computation in this package is in per-unit. Conversion from ohms, MW,
kW and similar happens once, when a feeder file is read.
"""

from nocasedict import NocaseDict

__all__ = ['PerUnitBase', 'IMPEDANCE_UNITS', 'POWER_UNITS']

#: Impedance unit tags, looked up case-insensitively. The value is `None` for
#: per-unit values and the string 'ohm' for values that are divided by the
#: base impedance.
IMPEDANCE_UNITS = NocaseDict([
    ('pu', None),
    ('p.u.', None),
    ('ohm', 'ohm'),
    ('ohms', 'ohm'),
])

#: Power unit tags, looked up case-insensitively. The value is the factor to
#: MW (or MVAr, MVA), or `None` for per-unit values.
POWER_UNITS = NocaseDict([
    ('pu', None),
    ('p.u.', None),
    ('MW', 1.0),
    ('kW', 1e-3),
    ('MVAr', 1.0),
    ('kVAr', 1e-3),
    ('MVA', 1.0),
    ('kVA', 1e-3),
])


class PerUnitBase(object):
    """
    Base quantities of a single-voltage-level feeder.

    The base impedance is ``base_kv**2 / base_mva`` in ohm.
    """

    __slots__ = ['_base_kv', '_base_mva']

    def __init__(self, base_kv, base_mva):
        """
        Parameters:

          base_kv (float): Base line-to-line voltage, in kV. Must be positive.

          base_mva (float): Base apparent power, in MVA. Must be positive.

        Raises:
          ValueError: A base quantity is not positive.
        """
        base_kv = float(base_kv)
        base_mva = float(base_mva)
        if not base_kv > 0 or not base_mva > 0:
            raise ValueError(
                "Base quantities must be positive, but are: {0} kV, {1} MVA".
                format(base_kv, base_mva))
        self._base_kv = base_kv
        self._base_mva = base_mva

    @property
    def base_kv(self):
        """float: Base voltage, in kV."""
        return self._base_kv

    @property
    def base_mva(self):
        """float: Base apparent power, in MVA."""
        return self._base_mva

    @property
    def z_base(self):
        """float: Base impedance, in ohm."""
        return self._base_kv ** 2 / self._base_mva

    def __repr__(self):
        return "{0.__class__.__name__}(base_kv={0.base_kv!r}, " \
            "base_mva={0.base_mva!r})".format(self)

    def __eq__(self, other):
        if not isinstance(other, PerUnitBase):
            return NotImplemented
        return (self._base_kv, self._base_mva) == \
            (other.base_kv, other.base_mva)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash((self._base_kv, self._base_mva))

    def impedance_to_pu(self, value, unit):
        """
        Convert an impedance to per-unit.

        Parameters:

          value (float): The impedance value.

          unit (:term:`string`): Unit tag from :data:`IMPEDANCE_UNITS`.

        Returns:
          float: The impedance in pu.

        Raises:
          KeyError: The unit tag is unknown.
        """
        if IMPEDANCE_UNITS[unit] is None:
            return float(value)
        return float(value) / self.z_base

    def power_to_pu(self, value, unit):
        """
        Convert a real, reactive or apparent power to per-unit.

        Parameters:

          value (float): The power value.

          unit (:term:`string`): Unit tag from :data:`POWER_UNITS`.

        Returns:
          float: The power in pu.

        Raises:
          KeyError: The unit tag is unknown.
        """
        factor = POWER_UNITS[unit]
        if factor is None:
            return float(value)
        return float(value) * factor / self._base_mva
