#ifndef TADKIT_MODEL_CHECK_HPP
#define TADKIT_MODEL_CHECK_HPP

#include <memory>
#include <vector>

#include "tadkit/gradcheck.hpp"
#include "tadkit/losses.hpp"
#include "tadkit/network.hpp"
#include "tadkit/prng.hpp"

namespace tadkit {

// Finite-difference verification of the whole training objective: builds a
// 64-bit model, a random clip with random ground truth, and compares the
// analytic parameter gradients of the normalized total loss. `corrupt`
// injects an error into one analytic entry (negative control).
inline GradCheckReport model_grad_check(const RunConfig& cfg64, uint64_t seed,
                                        size_t min_coords = 200, bool corrupt = false) {
    Model<double> model(cfg64, seed);
    const double fps = cfg64.data.fps;
    const auto pyramid = model.pyramid_levels(cfg64.clip_frames, fps);
    AnchorSet anchors =
        generate_anchors(pyramid, cfg64.head.anchor_base, cfg64.head.anchors_per_location);
    PointSet points = build_points(pyramid, cfg64.head.af_range_borders);
    const bool ab = cfg64.head.kind == HeadKind::kAnchorBased;
    const double clip_sec = cfg64.clip_frames / fps;

    Prng rng(mix_seed(seed, 0x6d636b01));
    Tensor<double> input(cfg64.backbone.in_channels, cfg64.clip_frames,
                         cfg64.backbone.spatial_cols());
    for (auto& v : input.v) v = rng.gaussian();

    // A few well-separated ground truths spanning different scales.
    std::vector<ActionInstance> gts;
    const int n_gts = 3;
    for (int k = 0; k < n_gts; ++k) {
        const double span = clip_sec / n_gts;
        const double len = rng.uniform(0.25 * span, 0.8 * span);
        const double start = k * span + rng.uniform(0.05 * span, span - len - 0.05 * span);
        gts.emplace_back(Interval(start, start + len),
                         static_cast<int>(rng.next_below(cfg64.head.num_classes)));
    }

    auto forward_loss = [&](GradStore<double>* store, LossTerms<double>* terms_out) {
        Graph<double> g(store, store != nullptr);
        const int in = g.input(input);
        const PyramidOutput<double> pyr = model.forward(g, in);
        const LossTerms<double> terms =
            detection_loss_terms(g, pyr, cfg64.head, cfg64.loss, ab ? &anchors : nullptr,
                                 ab ? nullptr : &points, gts);
        const double norm = 1.0 / std::max(1, terms.num_positives);
        const double total = norm * g.val(terms.cls).v[0] +
                             cfg64.loss.alpha_weight * norm * g.val(terms.reg).v[0];
        if (terms_out) *terms_out = terms;
        if (store) {
            g.backward({{terms.cls, norm}, {terms.reg, cfg64.loss.alpha_weight * norm}});
        }
        return total;
    };

    GradStore<double> store(model.params().size());
    LossTerms<double> terms;
    forward_loss(&store, &terms);

    std::vector<Param<double>*> params;
    for (auto& p : model.params()) params.push_back(&p);
    std::vector<Tensor<double>> analytic;
    for (size_t i = 0; i < store.size(); ++i) analytic.push_back(store[i]);
    if (corrupt) {
        // Negative control: every sampled coordinate must now disagree.
        for (auto& a : analytic) {
            for (auto& v : a.v) v += 0.5;
        }
    }

    auto eval = [&]() { return forward_loss(nullptr, nullptr); };
    return grad_check(params, analytic, eval, seed, min_coords);
}

}  // namespace tadkit

#endif
