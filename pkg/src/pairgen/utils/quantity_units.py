import astropy.units as u


def validate_quantity(
    value: u.Quantity | float | str, float_unit: u.Unit
) -> u.Quantity:
    """Convert a value to a quantity, if necesary.

    Args:
        value (u.Quantity | float | str): The value to convert.
        float_unit (u.Unit): If a float, the unit to apply.

    Returns:
        u.Quantity: The parameter as a Quantity

    Raises:
        ValueError: When the value cannot be expressed in `float_unit`.
    """
    if value is None:
        return None
    elif isinstance(value, u.Quantity):
        q = value
    elif isinstance(value, str):
        q = u.Quantity(value)
    else:
        q = float(value) * float_unit

    if not q.unit.is_equivalent(float_unit):
        raise ValueError(f"Quantity {q} is not convertible to {float_unit}")
    return q


def to_si(value: u.Quantity | float | str, float_unit: u.Unit) -> float:
    """Convert a value to a bare float expressed in `float_unit`.

    Args:
        value (u.Quantity | float | str): The value to convert. Bare numbers are
        assumed to already be in `float_unit`.
        float_unit (u.Unit): The unit of the returned number.

    Returns:
        float: The magnitude in `float_unit`, or None when `value` is None.
    """
    q = validate_quantity(value, float_unit)
    if q is None:
        return None
    return float(q.to_value(float_unit))
