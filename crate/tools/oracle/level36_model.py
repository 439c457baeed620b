"""Published canonical model of 36.108.6.g.1 and the published map to y^2 = x^3 - 27x - 918."""
import sympy as sp

VARS = sp.symbols('x y z w t u')
x, y, z, w, t, u = VARS

QUADRICS = [
    "x**2 - 2*x*y + x*z - 2*x*t + x*u + y**2 - 2*y*z - y*w + 2*y*t - 2*y*u - z**2 - z*w - z*t + t**2 - t*u",
    "5*x**2 + x*y - x*z - x*w + 2*x*u - 3*y**2 - y*z - y*w - y*u + z**2 - 2*z*w + z*t + z*u + w**2 - w*u + t**2 - t*u - u**2",
    "2*x**2 + x*y + 7*x*z + 2*x*u + y**2 + 2*y*z - y*t - z**2 + z*w + 4*z*t + w*u - 2*t**2 + t*u + 2*u**2",
    "-2*x**2 - x*y - x*z - x*w + x*t - 4*x*u + 2*y**2 + 4*y*z - 2*y*w + y*t + 4*z**2 - 3*z*w - 2*z*t + w*t - w*u + t**2 + t*u - 2*u**2",
    "2*x**2 + 3*x*y - x*z - 3*x*w + 2*x*t - 2*y**2 - 2*y*z - y*w + 2*y*t - 4*y*u - 3*z**2 + z*w - 2*z*u + w**2 - 2*w*t + 2*w*u + 2*t**2 - 4*t*u + u**2",
    "-4*x*y - 7*x*z + 5*x*w - x*t + x*u + 2*y*z - 2*y*w + y*t - 4*z**2 + 2*z*w + 2*z*t + 2*z*u + w**2 - 2*w*t + 2*w*u + t**2 - t*u",
]

MAP = [
    "-80865*w**3 - 4233750*x*w*t - 2907675*y*w*t - 3974655*z*w*t + 1154970*w**2*t + 86070*x*t**2 + 2837475*y*t**2 + 1681830*z*t**2"
    " + 11400*w*t**2 + 2186145*t**3 + 625677*x*w*u - 1836726*y*w*u - 475260*z*w*u + 640431*w**2*u + 4842783*x*t*u - 3679683*y*t*u"
    " - 3969162*z*t*u - 583134*w*t*u - 1910592*t**2*u - 2128272*x*u**2 - 1420182*y*u**2 + 3618864*z*u**2 + 515016*w*u**2 - 1344717*t*u**2"
    " + 137502*u**3",
    "-531000*w**3 - 17171234*x*w*t + 5629322*y*w*t - 8938390*z*w*t - 722802*w**2*t + 5255504*x*t**2 - 694824*y*t**2"
    " - 3354536*z*t**2 + 4220858*w*t**2 - 363296*t**3 + 14286534*x*w*u - 24342*y*w*u + 11148240*z*w*u - 367938*w**2*u - 4194040*x*t*u"
    " + 6121128*y*t*u - 5889672*z*t*u - 1698510*w*t*u - 6713120*t**2*u + 807816*x*u**2 - 5691744*y*u**2 + 6073488*z*u**2 - 2942478*w*u**2"
    " + 12904152*t*u**2 - 6298416*u**3",
    "15105*w**3 - 1444796*x*w*t - 976837*y*w*t - 605135*z*w*t + 280222*w**2*t + 1143196*x*t**2"
    " + 1385759*y*t**2 - 1015704*z*t**2 - 473518*w*t**2 + 1202561*t**3 + 1457571*x*w*u + 864672*y*w*u + 770040*z*w*u - 248907*w**2*u"
    " - 2540585*x*t*u - 2981883*y*t*u - 516438*z*t*u + 645130*w*t*u - 2324570*t**2*u + 1386504*x*u**2 + 1624014*y*u**2 + 888552*z*u**2"
    " - 250842*w*u**2 + 900783*t*u**2 + 68586*u**3",
]

POINTS = [(0, 1, -1, -2, 0, 1), (1, 2, -2, 7, 3, 4), (2, 1, -1, 2, 6, 5)]


def quadrics():
    return [sp.Poly(sp.sympify(s), *VARS) for s in QUADRICS]


def map_polys():
    return [sp.Poly(sp.sympify(s), *VARS) for s in MAP]
