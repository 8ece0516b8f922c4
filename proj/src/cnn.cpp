#include "nucleo/cnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <thread>

#include "cnn_internal.hpp"
#include "nucleo/csv.hpp"

namespace nucleo::cnn {

void CnnConfig::validate() const {
    auto fail = [](const std::string& what) { throw ShapeMismatch(what); };
    if (k1 < 1 || k2 < 1 || c1 < 1 || c2 < 1 || hidden < 1) fail("layer sizes must be positive");
    if (conv1_out() < 2) fail("input too small for conv1 + pool");
    if (pool1_out() < k2) fail("pool1 output smaller than the conv2 kernel");
    if (conv2_out() < 2) fail("conv2 output too small to pool");
    if (pool2_out() < 1) fail("empty pool2 output");
}

CnnConfig CnnConfig::standard() {
    CnnConfig cfg;
    cfg.validate();
    if (cfg.conv1_out() != 71 || cfg.pool1_out() != 35 || cfg.conv2_out() != 31 ||
        cfg.pool2_out() != 15 || cfg.fc_in() != 2700)
        throw ShapeMismatch("standard layer chain must be 75-71-35-31-15");
    return cfg;
}

CnnModel CnnModel::zeros(const CnnConfig& cfg) {
    cfg.validate();
    CnnModel m;
    m.cfg = cfg;
    m.conv1_w.assign(static_cast<std::size_t>(cfg.c1) * cfg.k1 * cfg.k1, 0.0);
    m.conv1_b.assign(cfg.c1, 0.0);
    m.conv2_w.assign(static_cast<std::size_t>(cfg.c2) * cfg.c1 * cfg.k2 * cfg.k2, 0.0);
    m.conv2_b.assign(cfg.c2, 0.0);
    m.fc1_w.assign(static_cast<std::size_t>(cfg.hidden) * cfg.fc_in(), 0.0);
    m.fc1_b.assign(cfg.hidden, 0.0);
    m.fc2_w.assign(static_cast<std::size_t>(2) * cfg.hidden, 0.0);
    m.fc2_b.assign(2, 0.0);
    return m;
}

CnnModel CnnModel::random_init(const CnnConfig& cfg, std::uint64_t seed) {
    CnnModel m = zeros(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::vector<double>& w, int fan_in) {
        const double limit = std::sqrt(6.0 / fan_in);
        for (double& v : w) v = (2.0 * detail::u01(rng) - 1.0) * limit;
    };
    fill(m.conv1_w, cfg.k1 * cfg.k1);
    fill(m.conv2_w, cfg.c1 * cfg.k2 * cfg.k2);
    fill(m.fc1_w, cfg.fc_in());
    fill(m.fc2_w, cfg.hidden);
    return m;
}

std::size_t CnnModel::parameter_count() const {
    return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size() +
           fc1_w.size() + fc1_b.size() + fc2_w.size() + fc2_b.size();
}

namespace {

struct ForwardCache {
    std::vector<double> conv1, pool1, conv2, pool2, h_pre, h;
    std::vector<std::int32_t> arg1, arg2;
    double logits[2] = {0, 0};
    double p[2] = {0, 0};
};

void forward_cached(const CnnModel& m, const std::vector<double>& patch,
                    ForwardCache& fc) {
    const CnnConfig& c = m.cfg;
    if (patch.size() != static_cast<std::size_t>(c.input) * c.input)
        throw ShapeMismatch("patch has " + std::to_string(patch.size()) +
                            " values, expected " +
                            std::to_string(static_cast<std::size_t>(c.input) * c.input));
    const int n1 = c.conv1_out(), m1 = c.pool1_out();
    const int n2 = c.conv2_out(), m2 = c.pool2_out();
    fc.conv1.resize(static_cast<std::size_t>(c.c1) * n1 * n1);
    fc.pool1.resize(static_cast<std::size_t>(c.c1) * m1 * m1);
    fc.arg1.resize(fc.pool1.size());
    fc.conv2.resize(static_cast<std::size_t>(c.c2) * n2 * n2);
    fc.pool2.resize(static_cast<std::size_t>(c.c2) * m2 * m2);
    fc.arg2.resize(fc.pool2.size());
    fc.h_pre.resize(c.hidden);
    fc.h.resize(c.hidden);

    detail::conv_valid(patch.data(), 1, c.input, c.input, m.conv1_w.data(),
                       m.conv1_b.data(), c.c1, c.k1, fc.conv1.data());
    detail::maxpool2(fc.conv1.data(), c.c1, n1, n1, fc.pool1.data(), fc.arg1.data());
    detail::conv_valid(fc.pool1.data(), c.c1, m1, m1, m.conv2_w.data(),
                       m.conv2_b.data(), c.c2, c.k2, fc.conv2.data());
    detail::maxpool2(fc.conv2.data(), c.c2, n2, n2, fc.pool2.data(), fc.arg2.data());
    detail::fc_forward(m.fc1_w.data(), m.fc1_b.data(), fc.pool2.data(), c.hidden,
                       c.fc_in(), fc.h_pre.data());
    for (int i = 0; i < c.hidden; ++i) fc.h[i] = fc.h_pre[i] > 0.0 ? fc.h_pre[i] : 0.0;
    detail::fc_forward(m.fc2_w.data(), m.fc2_b.data(), fc.h.data(), 2, c.hidden,
                       fc.logits);
    auto [p0, p1] = detail::softmax2(fc.logits[0], fc.logits[1]);
    fc.p[0] = p0;
    fc.p[1] = p1;
}

struct Grad {
    std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b;

    explicit Grad(const CnnModel& m)
        : conv1_w(m.conv1_w.size(), 0.0),
          conv1_b(m.conv1_b.size(), 0.0),
          conv2_w(m.conv2_w.size(), 0.0),
          conv2_b(m.conv2_b.size(), 0.0),
          fc1_w(m.fc1_w.size(), 0.0),
          fc1_b(m.fc1_b.size(), 0.0),
          fc2_w(m.fc2_w.size(), 0.0),
          fc2_b(m.fc2_b.size(), 0.0) {}

    void add(const Grad& o) {
        auto axpy = [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        };
        axpy(conv1_w, o.conv1_w);
        axpy(conv1_b, o.conv1_b);
        axpy(conv2_w, o.conv2_w);
        axpy(conv2_b, o.conv2_b);
        axpy(fc1_w, o.fc1_w);
        axpy(fc1_b, o.fc1_b);
        axpy(fc2_w, o.fc2_w);
        axpy(fc2_b, o.fc2_b);
    }
};

// gradient of -log p_target for one sample, accumulated into g
void backward_sample(const CnnModel& m, const std::vector<double>& patch,
                     const ForwardCache& fc, int target, Grad& g,
                     std::vector<double>& scratch) {
    const CnnConfig& c = m.cfg;
    const int n1 = c.conv1_out(), m1 = c.pool1_out();
    const int n2 = c.conv2_out(), m2 = c.pool2_out();

    double dl[2] = {fc.p[0] - (target == 0 ? 1.0 : 0.0),
                    fc.p[1] - (target == 1 ? 1.0 : 0.0)};

    scratch.assign(static_cast<std::size_t>(c.hidden), 0.0);
    std::vector<double>& dh = scratch;
    for (int i = 0; i < 2; ++i) {
        const double gi = dl[i];
        g.fc2_b[i] += gi;
        double* gw = g.fc2_w.data() + static_cast<std::size_t>(i) * c.hidden;
        const double* w = m.fc2_w.data() + static_cast<std::size_t>(i) * c.hidden;
        for (int j = 0; j < c.hidden; ++j) {
            gw[j] += gi * fc.h[j];
            dh[j] += gi * w[j];
        }
    }
    for (int j = 0; j < c.hidden; ++j)
        if (fc.h_pre[j] <= 0.0) dh[j] = 0.0;

    std::vector<double> dx(static_cast<std::size_t>(c.fc_in()), 0.0);
    for (int i = 0; i < c.hidden; ++i) {
        const double gi = dh[i];
        g.fc1_b[i] += gi;
        double* gw = g.fc1_w.data() + static_cast<std::size_t>(i) * c.fc_in();
        const double* w = m.fc1_w.data() + static_cast<std::size_t>(i) * c.fc_in();
        if (gi == 0.0) continue;
        for (int j = 0; j < c.fc_in(); ++j) {
            gw[j] += gi * fc.pool2[j];
            dx[j] += gi * w[j];
        }
    }

    std::vector<double> dconv2(static_cast<std::size_t>(c.c2) * n2 * n2, 0.0);
    for (std::size_t cell = 0; cell < dx.size(); ++cell) {
        const int ch = static_cast<int>(cell) / (m2 * m2);
        dconv2[static_cast<std::size_t>(ch) * n2 * n2 + fc.arg2[cell]] += dx[cell];
    }

    std::vector<double> dpool1(static_cast<std::size_t>(c.c1) * m1 * m1, 0.0);
    for (int oc = 0; oc < c.c2; ++oc) {
        const double* dop = dconv2.data() + static_cast<std::size_t>(oc) * n2 * n2;
        double* gwf = g.conv2_w.data() + static_cast<std::size_t>(oc) * c.c1 * c.k2 * c.k2;
        const double* wf = m.conv2_w.data() + static_cast<std::size_t>(oc) * c.c1 * c.k2 * c.k2;
        for (int oy = 0; oy < n2; ++oy) {
            for (int ox = 0; ox < n2; ++ox) {
                const double gv = dop[static_cast<std::size_t>(oy) * n2 + ox];
                if (gv == 0.0) continue;
                g.conv2_b[oc] += gv;
                for (int ic = 0; ic < c.c1; ++ic) {
                    const double* ip = fc.pool1.data() +
                                       (static_cast<std::size_t>(ic) * m1 + oy) * m1 + ox;
                    double* dpp = dpool1.data() +
                                  (static_cast<std::size_t>(ic) * m1 + oy) * m1 + ox;
                    double* gw = gwf + static_cast<std::size_t>(ic) * c.k2 * c.k2;
                    const double* w = wf + static_cast<std::size_t>(ic) * c.k2 * c.k2;
                    for (int ky = 0; ky < c.k2; ++ky) {
                        for (int kx = 0; kx < c.k2; ++kx) {
                            gw[ky * c.k2 + kx] += gv * ip[kx];
                            dpp[kx] += gv * w[ky * c.k2 + kx];
                        }
                        ip += m1;
                        dpp += m1;
                    }
                }
            }
        }
    }

    std::vector<double> dconv1(static_cast<std::size_t>(c.c1) * n1 * n1, 0.0);
    for (std::size_t cell = 0; cell < dpool1.size(); ++cell) {
        const int ch = static_cast<int>(cell) / (m1 * m1);
        dconv1[static_cast<std::size_t>(ch) * n1 * n1 + fc.arg1[cell]] += dpool1[cell];
    }

    for (int oc = 0; oc < c.c1; ++oc) {
        const double* dop = dconv1.data() + static_cast<std::size_t>(oc) * n1 * n1;
        double* gw = g.conv1_w.data() + static_cast<std::size_t>(oc) * c.k1 * c.k1;
        for (int oy = 0; oy < n1; ++oy) {
            for (int ox = 0; ox < n1; ++ox) {
                const double gv = dop[static_cast<std::size_t>(oy) * n1 + ox];
                if (gv == 0.0) continue;
                g.conv1_b[oc] += gv;
                const double* ip = patch.data() + static_cast<std::size_t>(oy) * c.input + ox;
                for (int ky = 0; ky < c.k1; ++ky) {
                    for (int kx = 0; kx < c.k1; ++kx)
                        gw[ky * c.k1 + kx] += gv * ip[kx];
                    ip += c.input;
                }
            }
        }
    }
}

struct StepStats {
    double loss_sum = 0.0;
    long long correct = 0;
};

StepStats step(CnnModel& model, const std::vector<PatchSample>& batch, double lr,
               int threads) {
    const std::size_t n = batch.size();
    if (n == 0) throw CnnError("empty batch");
    const int n_workers =
        std::max(1, std::min<int>(threads, static_cast<int>(n)));

    std::vector<Grad> grads(n_workers, Grad(model));
    std::vector<StepStats> stats(n_workers);
    auto work = [&](int w) {
        // static contiguous chunks so the per-chunk sums have a fixed
        // sample order for any given thread count
        const std::size_t lo = n * w / n_workers, hi = n * (w + 1) / n_workers;
        ForwardCache fc;
        std::vector<double> scratch;
        for (std::size_t i = lo; i < hi; ++i) {
            forward_cached(model, batch[i].pixels, fc);
            stats[w].loss_sum +=
                detail::ce_loss2(fc.logits[0], fc.logits[1], batch[i].label);
            const int pred = fc.p[1] > fc.p[0] ? 1 : 0;
            if (pred == batch[i].label) ++stats[w].correct;
            backward_sample(model, batch[i].pixels, fc, batch[i].label, grads[w],
                            scratch);
        }
    };
    if (n_workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (int w = 1; w < n_workers; ++w) {
        grads[0].add(grads[w]);
        stats[0].loss_sum += stats[w].loss_sum;
        stats[0].correct += stats[w].correct;
    }

    if (!std::isfinite(stats[0].loss_sum)) throw NonFiniteLoss();

    const double scale = lr / static_cast<double>(n);
    auto apply = [&](std::vector<double>& w, const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * g[i];
    };
    apply(model.conv1_w, grads[0].conv1_w);
    apply(model.conv1_b, grads[0].conv1_b);
    apply(model.conv2_w, grads[0].conv2_w);
    apply(model.conv2_b, grads[0].conv2_b);
    apply(model.fc1_w, grads[0].fc1_w);
    apply(model.fc1_b, grads[0].fc1_b);
    apply(model.fc2_w, grads[0].fc2_w);
    apply(model.fc2_b, grads[0].fc2_b);
    return stats[0];
}

template <typename Rng>
void fisher_yates(std::vector<std::uint32_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

std::pair<double, double> forward(const CnnModel& model,
                                  const std::vector<double>& patch) {
    ForwardCache fc;
    forward_cached(model, patch, fc);
    return {fc.p[0], fc.p[1]};
}

double train_step(CnnModel& model, const std::vector<PatchSample>& batch, double lr,
                  int threads) {
    StepStats s = step(model, batch, lr, threads);
    return s.loss_sum / static_cast<double>(batch.size());
}

TrainResult train(CnnModel model, const PatchSet& patches, const TrainOptions& opt) {
    if (patches.patches.empty()) throw CnnError("empty patch set");
    if (opt.batch < 1) throw CnnError("batch size must be >= 1");
    model.input_mean = patches.mean;

    std::vector<std::uint32_t> order;
    order.reserve(patches.patches.size());
    for (std::uint32_t i = 0; i < patches.patches.size(); ++i) order.push_back(i);
    if (opt.oversample_positives) {
        long long pos = patches.positives();
        long long neg = static_cast<long long>(patches.patches.size()) - pos;
        if (pos > 0 && neg > pos) {
            const long long extra = neg / pos - 1;
            for (long long r = 0; r < extra; ++r)
                for (std::uint32_t i = 0; i < patches.patches.size(); ++i)
                    if (patches.patches[i].positive) order.push_back(i);
        }
    }

    TrainResult result;
    std::mt19937_64 rng(opt.seed);
    std::vector<PatchSample> batch;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        fisher_yates(order, rng);
        double loss_sum = 0.0;
        long long correct = 0;
        for (std::size_t at = 0; at < order.size(); at += opt.batch) {
            const std::size_t end = std::min(order.size(), at + opt.batch);
            batch.clear();
            for (std::size_t i = at; i < end; ++i) {
                const PatchRef& ref = patches.patches[order[i]];
                batch.push_back(PatchSample{
                    normalize_patch(patches.frames[ref.frame], ref.x0, ref.y0,
                                    patches.patch_size, patches.mean),
                    ref.positive ? 1 : 0});
            }
            StepStats s = step(model, batch, opt.lr, opt.threads);
            loss_sum += s.loss_sum;
            correct += s.correct;
        }
        EpochStats es;
        es.epoch = epoch;
        es.mean_loss = loss_sum / static_cast<double>(order.size());
        es.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        result.log.push_back(es);
    }
    result.model = std::move(model);
    return result;
}

std::string training_log_csv(const std::vector<EpochStats>& log) {
    std::string out = "epoch,mean_loss,accuracy\n";
    for (const EpochStats& e : log)
        out += std::to_string(e.epoch) + ',' + fmt_double(e.mean_loss) + ',' +
               fmt_double(e.accuracy) + '\n';
    return out;
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& s, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint32_t get_u32(const std::string& s, std::size_t& at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at++])) << (8 * i);
    return v;
}
double get_f64(const std::string& s, std::size_t& at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at++])) << (8 * i);
    return std::bit_cast<double>(v);
}

constexpr char kMagic[] = "NUCLEOM1";

}  // namespace

void save_model(const std::string& path, const CnnModel& model) {
    std::string out(kMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(model.cfg.input));
    put_u32(out, static_cast<std::uint32_t>(model.cfg.k1));
    put_u32(out, static_cast<std::uint32_t>(model.cfg.c1));
    put_u32(out, static_cast<std::uint32_t>(model.cfg.k2));
    put_u32(out, static_cast<std::uint32_t>(model.cfg.c2));
    put_u32(out, static_cast<std::uint32_t>(model.cfg.hidden));
    put_f64(out, model.input_mean);
    for (const auto* w : {&model.conv1_w, &model.conv1_b, &model.conv2_w,
                          &model.conv2_b, &model.fc1_w, &model.fc1_b, &model.fc2_w,
                          &model.fc2_b})
        for (double v : *w) put_f64(out, v);
    write_file_atomic(path, out);
}

CnnModel load_model(const std::string& path) {
    std::string data;
    try {
        data = read_text_file(path);
    } catch (const std::exception& e) {
        throw ModelIoError(e.what());
    }
    if (data.size() < 8 + 24 + 8 || data.compare(0, 8, kMagic, 8) != 0)
        throw ModelIoError("not a model file: " + path);
    std::size_t at = 8;
    CnnConfig cfg;
    cfg.input = static_cast<int>(get_u32(data, at));
    cfg.k1 = static_cast<int>(get_u32(data, at));
    cfg.c1 = static_cast<int>(get_u32(data, at));
    cfg.k2 = static_cast<int>(get_u32(data, at));
    cfg.c2 = static_cast<int>(get_u32(data, at));
    cfg.hidden = static_cast<int>(get_u32(data, at));
    try {
        cfg.validate();
    } catch (const ShapeMismatch& e) {
        throw ModelIoError("model file has invalid shapes: " + std::string(e.what()));
    }
    CnnModel m = CnnModel::zeros(cfg);
    const std::size_t expect = at + 8 + 8 * m.parameter_count();
    if (data.size() != expect)
        throw ModelIoError("model file is " + std::to_string(data.size()) +
                           " bytes, expected " + std::to_string(expect));
    m.input_mean = get_f64(data, at);
    for (auto* w : {&m.conv1_w, &m.conv1_b, &m.conv2_w, &m.conv2_b, &m.fc1_w,
                    &m.fc1_b, &m.fc2_w, &m.fc2_b})
        for (double& v : *w) v = get_f64(data, at);
    return m;
}

}  // namespace nucleo::cnn
