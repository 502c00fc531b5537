#pragma once

// Uniform front end over the three classifiers plus the MDL1 model container.
//
// MDL1 layout (little-endian): "MDL1", u32 version, u8 kind, i32s vocab,
// standardizer, kind-specific blob, u64 FNV-1a of all preceding bytes.

#include <string>
#include <variant>
#include <vector>

#include "synthaction/classify/gbt.hpp"
#include "synthaction/classify/logistic.hpp"
#include "synthaction/classify/scaler.hpp"
#include "synthaction/classify/svm.hpp"

namespace synthaction::classify {

enum class ModelKind : std::uint8_t { Svm = 0, Logistic = 1, Gbt = 2 };

inline const char* model_name(ModelKind k) {
    switch (k) {
        case ModelKind::Svm: return "svm";
        case ModelKind::Logistic: return "logistic";
        case ModelKind::Gbt: return "gbt";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "svm") return ModelKind::Svm;
    if (s == "logistic") return ModelKind::Logistic;
    if (s == "gbt") return ModelKind::Gbt;
    throw InvalidArgument("unknown model '" + s + "' (expected svm, logistic or gbt)");
}

using ModelParams = std::variant<SvmParams, LogisticParams, GbtParams>;

inline ModelKind kind_of(const ModelParams& p) { return static_cast<ModelKind>(p.index()); }

inline ModelParams default_params(ModelKind k) {
    switch (k) {
        case ModelKind::Svm: return SvmParams{};
        case ModelKind::Logistic: return LogisticParams{};
        case ModelKind::Gbt: return GbtParams{};
    }
    return SvmParams{};
}

/// Short "key=value" rendering, e.g. "C=1 gamma=0.01 kernel=rbf".
inline std::string describe(const ModelParams& p) {
    auto num = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    if (const auto* s = std::get_if<SvmParams>(&p))
        return "C=" + num(s->c) + " gamma=" + (s->gamma ? num(*s->gamma) : std::string("auto")) +
               " kernel=rbf max_iter=" + std::to_string(s->max_iter);
    if (const auto* l = std::get_if<LogisticParams>(&p))
        return "C=" + num(l->inv_reg_c) + " penalty=l2 max_iter=" + std::to_string(l->max_iter);
    const auto& g = std::get<GbtParams>(p);
    return "learning_rate=" + num(g.learning_rate) + " max_depth=" + std::to_string(g.max_depth) +
           " n_estimators=" + std::to_string(g.n_estimators);
}

struct TrainedModel {
    ModelKind kind = ModelKind::Svm;
    std::vector<int> vocab;  // class index -> label
    Standardizer scaler;     // empty for GBT
    std::variant<SvmModel, LogisticModel, GbtModel> model;

    std::size_t dims() const {
        return std::visit([](const auto& m) { return m.dims; }, model);
    }
};

struct ValidationData {
    const FeatureMatrix* x = nullptr;
    const std::vector<int>* y = nullptr;
};

/// Trains on labels `y` (arbitrary ints). GBT may consult `val` for early stopping.
inline TrainedModel train_model(const FeatureMatrix& x, const std::vector<int>& y, const ModelParams& params,
                                unsigned jobs = 1, ValidationData val = {}) {
    validate_training_input(x, y);
    TrainedModel tm;
    tm.kind = kind_of(params);
    std::vector<int> cls;
    tm.vocab = label_vocabulary(y, &cls);
    const int k = static_cast<int>(tm.vocab.size());
    if (tm.kind == ModelKind::Gbt) {
        const auto& gp = std::get<GbtParams>(params);
        std::vector<int> vcls;
        if (gp.early_stopping_rounds > 0 && val.x && val.y) {
            for (int label : *val.y) {
                const auto it = std::lower_bound(tm.vocab.begin(), tm.vocab.end(), label);
                SYNTHACTION_REQUIRE(it != tm.vocab.end() && *it == label, "gbt: validation label absent from training");
                vcls.push_back(static_cast<int>(it - tm.vocab.begin()));
            }
            tm.model = gbt_fit(x, cls, k, gp, jobs, val.x, &vcls);
        } else {
            tm.model = gbt_fit(x, cls, k, gp, jobs);
        }
        return tm;
    }
    tm.scaler = Standardizer::fit(x);
    const auto xs = tm.scaler.transform(x);
    if (tm.kind == ModelKind::Svm)
        tm.model = svm_fit(xs, x.rows, x.cols, cls, k, std::get<SvmParams>(params), jobs);
    else
        tm.model = logistic_fit(xs, x.rows, x.cols, cls, k, std::get<LogisticParams>(params));
    return tm;
}

/// Per-class scores for each row (rows x K): SVM margins, logistic/GBT raw logits.
inline std::vector<std::vector<double>> decision_scores(const TrainedModel& tm, const FeatureMatrix& x) {
    SYNTHACTION_REQUIRE(x.rows == 0 || x.cols == tm.dims(), "predict: feature dimension mismatch");
    std::vector<std::vector<double>> out(x.rows);
    std::vector<double> buf(x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        if (tm.kind == ModelKind::Gbt) {
            out[r] = gbt_scores(std::get<GbtModel>(tm.model), x.row(r));
            continue;
        }
        tm.scaler.apply_row(x.row(r), buf.data());
        out[r] = tm.kind == ModelKind::Svm ? svm_decision(std::get<SvmModel>(tm.model), buf.data())
                                           : logistic_scores(std::get<LogisticModel>(tm.model), buf.data());
    }
    return out;
}

/// Class probabilities; logistic and GBT only.
inline std::vector<std::vector<double>> predict_proba(const TrainedModel& tm, const FeatureMatrix& x) {
    SYNTHACTION_REQUIRE(tm.kind != ModelKind::Svm, "predict_proba: SVM margins are not calibrated");
    auto s = decision_scores(tm, x);
    for (auto& row : s) row = softmax(row);
    return s;
}

/// Argmax of the scores; ties go to the lowest class index.
inline int argmax_first(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<int>(best);
}

inline std::vector<int> predict(const TrainedModel& tm, const FeatureMatrix& x) {
    const auto s = decision_scores(tm, x);
    std::vector<int> out(s.size());
    for (std::size_t r = 0; r < s.size(); ++r) out[r] = tm.vocab[static_cast<std::size_t>(argmax_first(s[r]))];
    return out;
}

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline std::string encode_model(const TrainedModel& tm) {
    ByteWriter w;
    w.raw("MDL1");
    w.u32(kModelFormatVersion);
    w.u8(static_cast<std::uint8_t>(tm.kind));
    w.i32s(tm.vocab);
    write_standardizer(w, tm.scaler);
    switch (tm.kind) {
        case ModelKind::Svm: write_svm(w, std::get<SvmModel>(tm.model)); break;
        case ModelKind::Logistic: write_logistic(w, std::get<LogisticModel>(tm.model)); break;
        case ModelKind::Gbt: write_gbt(w, std::get<GbtModel>(tm.model)); break;
    }
    Fnv1a h;
    h.update(w.bytes().data(), w.bytes().size());
    w.u64(h.digest());
    return w.bytes();
}

inline TrainedModel decode_model(std::string_view bytes) {
    if (bytes.size() < 4 + 4 + 1 + 8 || bytes.substr(0, 4) != "MDL1") throw IoError("model file: bad magic");
    {
        Fnv1a h;
        h.update(bytes.data(), bytes.size() - 8);
        ByteReader tail(bytes.substr(bytes.size() - 8));
        if (tail.u64() != h.digest()) throw IoError("model file: checksum mismatch");
    }
    ByteReader r(bytes.substr(0, bytes.size() - 8));
    r.raw(4);
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) throw IoError("model file: unsupported version " + std::to_string(version));
    TrainedModel tm;
    const std::uint8_t kind = r.u8();
    if (kind > 2) throw IoError("model file: unknown model kind");
    tm.kind = static_cast<ModelKind>(kind);
    tm.vocab = r.i32s();
    tm.scaler = read_standardizer(r);
    switch (tm.kind) {
        case ModelKind::Svm: tm.model = read_svm(r); break;
        case ModelKind::Logistic: tm.model = read_logistic(r); break;
        case ModelKind::Gbt: tm.model = read_gbt(r); break;
    }
    if (!r.done()) throw IoError("model file: trailing bytes");
    std::size_t k = 0;
    if (const auto* s = std::get_if<SvmModel>(&tm.model)) k = s->rho.size();
    else if (const auto* l = std::get_if<LogisticModel>(&tm.model)) k = static_cast<std::size_t>(l->n_classes);
    else k = static_cast<std::size_t>(std::get<GbtModel>(tm.model).n_classes);
    if (k != tm.vocab.size()) throw IoError("model file: vocabulary size mismatch");
    if (tm.kind != ModelKind::Gbt && tm.scaler.mean.size() != tm.dims())
        throw IoError("model file: scaler dimension mismatch");
    return tm;
}

inline void write_model(const std::filesystem::path& path, const TrainedModel& tm) {
    write_file_bytes(path, encode_model(tm));
}

inline TrainedModel read_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

}  // namespace synthaction::classify
