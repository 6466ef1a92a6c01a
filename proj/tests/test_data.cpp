#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "uss/env/data.hpp"
#include "uss/env/training.hpp"
#include "uss/experiment.hpp"

using namespace uss;
namespace fs = std::filesystem;

namespace {

class TempCsv {
public:
    explicit TempCsv(const std::string& text) {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("uss_") + info->test_suite_name() + "_" + info->name() + ".csv");
        std::ofstream(path_) << text;
    }
    ~TempCsv() { fs::remove(path_); }
    std::string path() const { return path_.string(); }

private:
    fs::path path_;
};

std::string expect_data_error(const std::string& text, const DatasetSchema& schema) {
    TempCsv f(text);
    try {
        load_dataset(f.path(), schema);
    } catch (const DataError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected DataError";
    return {};
}

const std::string source_dir = USS_SOURCE_DIR;

}  // namespace

TEST(LoadDataset, ScalesColumnsToUnitInterval) {
    TempCsv f("a,b,y\n0,10,1\n5,20,0\n10,15,1\n");
    const auto d = load_dataset(f.path(), {{"b", "a"}, "y"});
    ASSERT_EQ(d.samples.size(), 3u);
    EXPECT_EQ(d.feature_names, (std::vector<std::string>{"b", "a"}));
    EXPECT_EQ(d.samples[0].x, (std::vector<double>{-1.0, -1.0}));
    EXPECT_EQ(d.samples[1].x, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(d.samples[2].x, (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(d.samples[1].y, 0);
    EXPECT_EQ(d.scaling[0], (ColumnScaling{10.0, 20.0}));
}

TEST(LoadDataset, FixedScalingClampsAndConstantColumnsMapToZero) {
    TempCsv f("a,c,y\n-4,3,1\n2,3,0\n");
    const std::vector<ColumnScaling> fixed{{0.0, 2.0}, {3.0, 3.0}};
    const auto d = load_dataset(f.path(), {{"a", "c"}, "y"}, fixed);
    EXPECT_EQ(d.samples[0].x, (std::vector<double>{-1.0, 0.0}));
    EXPECT_EQ(d.samples[1].x, (std::vector<double>{1.0, 0.0}));
}

TEST(LoadDataset, ErrorsNameTheRowAndColumn) {
    const DatasetSchema schema{{"a", "b"}, "y"};
    auto msg = expect_data_error("a,b,y\n1,2,0\n3,,1\n", schema);
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("missing value"), std::string::npos) << msg;
    msg = expect_data_error("a,b,y\n1,x,0\n", schema);
    EXPECT_NE(msg.find("non-numeric"), std::string::npos) << msg;
    msg = expect_data_error("a,y\n1,0\n", schema);
    EXPECT_NE(msg.find("'b' not found"), std::string::npos) << msg;
    msg = expect_data_error("", schema);
    EXPECT_NE(msg.find("empty"), std::string::npos) << msg;
    msg = expect_data_error("a,b,y\n1,2,3\n", schema);
    EXPECT_NE(msg.find("label"), std::string::npos) << msg;
    msg = expect_data_error("a,b,y\n1,2\n", schema);
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
    EXPECT_THROW(load_dataset("/nonexistent/uss.csv", schema), IoError);
}

TEST(LoadDataset, Pima) {
    const auto d = load_dataset(source_dir + "/data/pima.csv",
                                {{"preg", "pres", "skin", "mass", "pedi", "age", "plas", "insu"}, "class"});
    EXPECT_EQ(d.samples.size(), 768u);
    EXPECT_EQ(d.samples.front().x.size(), 8u);
    std::size_t positives = 0;
    for (const auto& s : d.samples) positives += s.y;
    EXPECT_EQ(positives, 268u);
}

TEST(LoadDataset, Heart) {
    const auto d = load_dataset(source_dir + "/data/heart.csv",
                                {{"age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang",
                                  "oldpeak", "slope", "ca", "thal"},
                                 "num"});
    EXPECT_EQ(d.samples.size(), 297u);
}

TEST(WriteDataset, RoundTripsThroughLoad) {
    const auto data = generate_synthetic(50, 3);
    const fs::path p = fs::temp_directory_path() / "uss_roundtrip.csv";
    write_dataset(p.string(), data, synthetic_feature_names());
    const std::vector<ColumnScaling> identity(3, ColumnScaling{-1.0, 1.0});
    const auto back = load_dataset(p.string(), {synthetic_feature_names(), "label"}, identity);
    fs::remove(p);
    ASSERT_EQ(back.samples.size(), data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        EXPECT_EQ(back.samples[s].y, data[s].y);
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back.samples[s].x[k], data[s].x[k], 1e-15);
    }
}

TEST(TrainArm, HugeRegularisationGivesOneHalf) {
    const auto data = generate_synthetic(500, 1);
    const auto t = train_arm(data, {0, 1, 2}, 1e6);
    EXPECT_LT(t.arm.theta.cwiseAbs().maxCoeff(), 1e-5);
    for (const auto& c : data) EXPECT_NEAR(t.arm.probability(c.x), 0.5, 1e-5);
}

TEST(TrainArm, SeparableToySetIsFitExactly) {
    Dataset toy;
    for (int s = 0; s < 40; ++s) {
        const double x = -0.95 + 0.05 * s;
        toy.push_back({{x, 0.3}, x > 0.0 ? 1 : 0});
    }
    const auto t = train_arm(toy, {0}, 1e-4);
    EXPECT_FALSE(t.degenerate);
    for (const auto& c : toy) EXPECT_EQ(t.arm.probability(c.x) > 0.5 ? 1 : 0, c.y);
    EXPECT_EQ(t.arm.theta.size(), 2);
}

TEST(TrainArm, QuadraticInputsAndDeterminism) {
    const auto data = generate_synthetic(800, 4);
    const auto a = train_arm(data, {0, 1, 2}, 1e-4, ArmInput::quadratic);
    const auto b = train_arm(data, {0, 1, 2}, 1e-4, ArmInput::quadratic);
    EXPECT_EQ(a.arm.theta, b.arm.theta);
    EXPECT_EQ(a.arm.theta.size(), 10);
    double correct = 0.0;
    for (const auto& c : data) correct += (a.arm.probability(c.x) > 0.5 ? 1 : 0) == c.y ? 1.0 : 0.0;
    EXPECT_GT(correct / data.size(), 0.9);
}

TEST(TrainArm, DegenerateDataIsFlagged) {
    Dataset one_class{{{0.1}, 1}, {{-0.4}, 1}, {{0.7}, 1}};
    TrainingControls tc;
    tc.s_bound = 5.0;
    const auto t = train_arm(one_class, {0}, 0.0, ArmInput::linear, tc);
    EXPECT_TRUE(t.degenerate);
    EXPECT_TRUE(t.projected);
    EXPECT_LE(t.arm.theta.norm(), 5.0 + 1e-12);
    EXPECT_THROW(train_arm(one_class, {1}, 0.0), ConfigError);
    EXPECT_THROW(train_arm({}, {0}, 0.0), PreconditionError);
    EXPECT_THROW(train_arm(one_class, {0}, -1.0), ConfigError);
}

TEST(PimaConfig, FirstArmUsesTheSixProfileFeatures) {
    const auto cfg = load_experiment(source_dir + "/configs/pima_pi1.json");
    ASSERT_EQ(cfg.arms.size(), 3u);
    EXPECT_EQ(cfg.arms[0].columns, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    const std::vector<std::string> profile{"preg", "pres", "skin", "mass", "pedi", "age"};
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(cfg.features[cfg.arms[0].columns[c]], profile[c]);
    EXPECT_EQ(cfg.features[cfg.arms[1].columns.back()], "plas");
    EXPECT_EQ(cfg.features[cfg.arms[2].columns.back()], "insu");
}
