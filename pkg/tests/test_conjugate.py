import unittest
import math
import numpy as np
from glstoolkit import conjugate
from glstoolkit.conjugate import ConvexGridFunction, TailEnvelope, fenchel, tail_bound, \
    norm_bound_from_tail, orlicz_M
from glstoolkit.psi import PsiM, PsiML, PsiBBeta, Degenerate
from glstoolkit.exceptions import OutOfValidityError, UnboundedMomentError, InvalidFunctionError, \
    NoClosedFormError, PreconditionError


class TestFenchel(unittest.TestCase):

    def test_quadratic(self):
        """Tests the transform of x^2/2 at u=1."""
        f = ConvexGridFunction.from_callable(lambda x: x**2/2, np.linspace(-10., 10., 2001))
        self.assertAlmostEqual(fenchel(f, 1.), 0.5, places=9)

    def test_absolute_value(self):
        """Tests the transform of |x| inside the unit slope."""
        f = ConvexGridFunction.from_callable(np.abs, np.linspace(-10., 10., 2001))
        self.assertAlmostEqual(fenchel(f, 0.5), 0., places=9)

    def test_entropy(self):
        """Tests the transform of p ln p, which is exp(u-1)."""
        f = ConvexGridFunction.from_callable(lambda p: p*np.log(p), np.geomspace(1., 1e3, 2001))
        self.assertAlmostEqual(fenchel(f, 2.), math.e, places=9)

    def test_without_evaluator(self):
        """Tests the pure grid supremum of a tabulated function."""
        f = ConvexGridFunction([0., 1., 2.], [0., 1., 4.])
        self.assertEqual(fenchel(f, 1.), 0.)
        self.assertEqual(fenchel(f, 3.), 2.)

    def test_double_conjugate(self):
        """Tests that conjugating twice recovers a convex function."""
        for a in (0.5, 1., 2.):
            f = ConvexGridFunction.from_callable(lambda x, a=a: a*x**2/2, np.linspace(-10., 10., 2001))
            fstar = f.conjugate(np.linspace(-10.*a, 10.*a, 2001))
            self.assertTrue(fstar.is_convex())
            for x in np.linspace(-5., 5., 11):
                self.assertAlmostEqual(fenchel(fstar, x), a*x**2/2, delta=1e-6)

    def test_convexity_check(self):
        """Tests that non-convex values are rejected on request."""
        with self.assertRaises(InvalidFunctionError):
            ConvexGridFunction([0., 1., 2.], [0., 1., 0.], check=True)
        with self.assertRaises(PreconditionError):
            ConvexGridFunction([0., 0., 1.], [0., 1., 2.])
        with self.assertRaises(InvalidFunctionError):
            ConvexGridFunction([0., 1.], [0., np.inf])


class TestTailBound(unittest.TestCase):

    def test_power_family(self):
        """Tests the tail bound of psi_2 at the validity threshold."""
        self.assertAlmostEqual(tail_bound(PsiM(2), 1., math.e), math.exp(-math.e/2), places=8)

    def test_degenerate(self):
        """Tests the tail bound of the degenerate function."""
        self.assertAlmostEqual(tail_bound(Degenerate(2), 1., math.e), math.exp(-2.), places=8)

    def test_scaled_norm(self):
        """Tests that the level is read relative to the norm."""
        self.assertAlmostEqual(tail_bound(PsiM(1), 2., 2.*math.e**2), math.exp(-math.e), places=8)

    def test_threshold_tolerance(self):
        """Tests that a level rounded just below e is still accepted."""
        self.assertAlmostEqual(tail_bound(Degenerate(2), 1., 2.71828), math.exp(-2.), places=4)

    def test_out_of_validity(self):
        """Tests that levels below e ||f|| are refused with the threshold attached."""
        with self.assertRaises(OutOfValidityError) as cm:
            tail_bound(PsiM(2), 1., 1.)
        self.assertAlmostEqual(cm.exception.threshold, math.e, places=12)
        with self.assertRaises(PreconditionError):
            tail_bound(PsiM(2), 0., 10.)

    def test_monotone(self):
        """Tests that the bound is nonincreasing in the level."""
        values = [tail_bound(PsiBBeta(3, 1), 1., y) for y in np.geomspace(math.e, 1e4, 20)]
        self.assertTrue(all(b <= a + 1e-15 for a, b in zip(values, values[1:])))
        self.assertTrue(all(0 <= v <= 1 for v in values))


class TestOrlicz(unittest.TestCase):

    def test_values(self):
        """Tests the Young-Orlicz function on both branches."""
        self.assertAlmostEqual(orlicz_M(PsiM(1), math.e**2), math.exp(math.e), places=6)
        self.assertEqual(orlicz_M(PsiM(1), 0.), 0.)
        self.assertAlmostEqual(orlicz_M(PsiM(1), -math.e**2), orlicz_M(PsiM(1), math.e**2), places=9)

    def test_continuity(self):
        """Tests that the two branches meet at e."""
        left = orlicz_M(PsiM(2), math.e*(1. - 1e-9))
        right = orlicz_M(PsiM(2), math.e)
        self.assertAlmostEqual(left, right, places=6)


class TestTailEnvelope(unittest.TestCase):

    def test_from_generating_function(self):
        """Tests that the envelope matches the tail bound above the threshold and is 1 below."""
        tail = TailEnvelope.from_generating_function(PsiM(2), 2.)
        self.assertEqual(tail(1.), 1.)
        self.assertAlmostEqual(tail(10.), tail_bound(PsiM(2), 2., 10.), places=12)
        self.assertAlmostEqual(tail.y_min, 2.*math.e, places=12)

    def test_reference(self):
        """Tests the reference shapes of the named families."""
        self.assertAlmostEqual(TailEnvelope.reference(PsiM(2))(2.), math.exp(-4.), places=12)
        tail = TailEnvelope.reference(Degenerate(2))
        self.assertEqual(tail(0.5), 1.)
        self.assertAlmostEqual(tail(2.), 0.25, places=12)
        self.assertGreaterEqual(TailEnvelope.reference(PsiBBeta(2, 1)).y_min, math.e)
        with self.assertRaises(NoClosedFormError):
            TailEnvelope.reference(PsiML(2, {'kind': 'log_power', 'r': 1.}))

    def test_validation(self):
        """Tests that increasing or negative envelopes are rejected."""
        with self.assertRaises(InvalidFunctionError):
            TailEnvelope(lambda y: y)
        with self.assertRaises(InvalidFunctionError):
            TailEnvelope(lambda y: -1.)
        with self.assertRaises(PreconditionError):
            TailEnvelope(lambda y: 0., y_min=-1.)


class TestNormBoundFromTail(unittest.TestCase):

    def test_zero_envelope(self):
        """Tests that a vanishing envelope certifies the norm 0."""
        self.assertEqual(norm_bound_from_tail(TailEnvelope(lambda y: 0.), PsiM(2)), 0.)

    def test_gaussian_tail(self):
        """Tests the bound from exp(-y^2), attained at p=1 where it equals Gamma(3/2)."""
        tail = TailEnvelope(lambda y: math.exp(-y*y), log_evaluator=lambda y: -y*y)
        bound = norm_bound_from_tail(tail, PsiM(2))
        self.assertAlmostEqual(bound, math.gamma(1.5), places=4)
        self.assertAlmostEqual(norm_bound_from_tail(tail, PsiM(2), K=3.), 3.*bound, places=9)

    def test_unbounded_moment(self):
        """Tests that a power tail makes moments of order >= 2 diverge."""
        tail = TailEnvelope(lambda y: y**-2., y_min=1., log_evaluator=lambda y: -2.*math.log(y))
        with self.assertRaises(UnboundedMomentError) as cm:
            norm_bound_from_tail(tail, PsiM(2))
        self.assertGreaterEqual(cm.exception.p, 2.)

    def test_unbounded_moment_underflowing_envelope(self):
        """Tests divergence detection for plain envelopes that underflow to 0 at large y."""
        tails = [TailEnvelope.from_callable(lambda y: min(1., y**-2.) if y > 0 else 1.),
                 TailEnvelope.from_callable(lambda y: y**-2., y_min=1.)]
        for tail in tails:
            with self.assertRaises(UnboundedMomentError) as cm:
                norm_bound_from_tail(tail, PsiM(2))
            self.assertGreaterEqual(cm.exception.p, 2.)

    def test_fast_tail_without_log(self):
        """Tests that an exponential envelope given without its logarithm still yields a finite bound."""
        tail = TailEnvelope.from_callable(lambda y: math.exp(-y*y))
        self.assertAlmostEqual(norm_bound_from_tail(tail, PsiM(2)), math.gamma(1.5), places=3)

    def test_finite_support_refused(self):
        """Tests that generating functions with finite support are refused."""
        with self.assertRaises(PreconditionError):
            norm_bound_from_tail(TailEnvelope(lambda y: 0.), Degenerate(2))

    def test_round_trip(self):
        """Tests that norm -> tail -> norm stays within a bounded factor."""
        for m in (1., 2., 4.):
            tail = TailEnvelope.from_generating_function(PsiM(m), 1.)
            bound = norm_bound_from_tail(tail, PsiM(m), n=16)
            self.assertGreaterEqual(bound, 0.1)
            self.assertLessEqual(bound, 10.)

    def test_validity_tolerance(self):
        """Tests the accepted relative shortfall below the threshold."""
        self.assertLess(conjugate.VALIDITY_RTOL, 1e-5)


if __name__ == '__main__':
    unittest.main()
