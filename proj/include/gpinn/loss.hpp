#pragma once

namespace gpinn {

// Scaling factors of the four loss terms. ic is carried for the record but
// both case studies are steady-state, so it never becomes nonzero.
struct LossWeights {
    double pde = 1.0;
    double data = 0.0;
    double ic = 0.0;
    double bc = 1.0;
};

struct LossBreakdown {
    double total = 0.0;
    double pde = 0.0;
    double data = 0.0;
    double ic = 0.0;
    double bc = 0.0;
    LossWeights weights;
};

inline LossBreakdown combine_loss(double pde, double data, double ic, double bc,
                                  const LossWeights& w) {
    LossBreakdown out;
    out.pde = pde;
    out.data = data;
    out.ic = ic;
    out.bc = bc;
    out.weights = w;
    out.total = w.pde * pde + w.data * data + w.ic * ic + w.bc * bc;
    return out;
}

} // namespace gpinn
