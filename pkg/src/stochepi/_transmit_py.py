"""Pure-Python transmission-attempt kernel (reference and fallback)."""


def transmit_attempts(u, p_g, n_g, n_o, s_g, s_o):
    """Resolve one day's transmission attempts against the two groups.

    Each uniform ``u[i]`` picks the target group (G when ``u < p_g``) and,
    rescaled to [0, 1), a uniform member of that group; the attempt infects
    only if that member is still susceptible.  Susceptible counts are
    depleted as the attempts are resolved in order.

    Returns:
        (new infections in G, new infections in the complement)
    """
    new_g = new_o = 0
    q_o = 1.0 - p_g
    for ui in u.tolist():
        if ui < p_g:
            if (ui / p_g) * n_g < s_g:
                s_g -= 1
                new_g += 1
        else:
            if ((ui - p_g) / q_o) * n_o < s_o:
                s_o -= 1
                new_o += 1
    return new_g, new_o
