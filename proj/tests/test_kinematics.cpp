#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "teleop/chain_config.hpp"
#include "teleop/errors.hpp"
#include "teleop/kinematics.hpp"

using namespace teleop;
using Eigen::Quaterniond;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

const std::string kGen3 = std::string(TELEOP_DATA_DIR) + "/chains/kinova_gen3.json";

KinematicChain planar_two_link() {
    Joint a{"a", Vector3d::UnitZ(), Pose::identity()};
    Joint b{"b", Vector3d::UnitZ(), Pose::from_translation({1, 0, 0})};
    return {"planar", {a, b}, Pose::from_translation({1, 0, 0})};
}

KinematicChain degenerate_chain(int dof) {
    std::vector<Joint> joints;
    for (int i = 0; i < dof; ++i) joints.push_back({"j" + std::to_string(i), Vector3d::UnitZ(), Pose::identity()});
    return {"degenerate", joints, Pose::identity()};
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

Twist twist_of(const Vector6d& v) { return {v.head<3>(), v.tail<3>()}; }

} // namespace

TEST_SUITE("kinematics") {

TEST_CASE("pose quaternion stays unit through construction and composition") {
    std::mt19937_64 rng(11);
    Pose acc;
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector4d raw = Eigen::Vector4d::Random() * 3.0;
        const Pose p(oracle::random_vec(rng, 1.0), Quaterniond(raw(0), raw(1), raw(2), raw(3) + 0.1));
        CHECK(std::abs(p.orientation().norm() - 1.0) <= 1e-9);
        acc = acc * oracle::random_pose(rng);
        CHECK(std::abs(acc.orientation().norm() - 1.0) <= 1e-9);
    }
}

TEST_CASE("pose composition is associative and inverse cancels") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 500; ++i) {
        const Pose a = oracle::random_pose(rng), b = oracle::random_pose(rng), c = oracle::random_pose(rng);
        const Pose l = (a * b) * c, r = a * (b * c);
        CHECK((l.position() - r.position()).norm() <= 1e-9);
        CHECK(oracle::angle_between(l.orientation(), r.orientation()) <= 1e-9);
        const Pose e = a * a.inverse();
        CHECK(e.position().norm() <= 1e-9);
        CHECK(oracle::angle_between(e.orientation(), Quaterniond::Identity()) <= 1e-9);
    }
}

TEST_CASE("zero-offset chain keeps the tool at the base origin") {
    std::mt19937_64 rng(13);
    const KinematicChain chain = degenerate_chain(5);
    for (int i = 0; i < 50; ++i) {
        const VectorXd q = oracle::random_config(rng, chain);
        const Pose p = forward_kinematics(chain, q);
        CHECK(p.position().norm() <= 1e-12);
        const Quaterniond net(Eigen::AngleAxisd(q.sum(), Vector3d::UnitZ()));
        CHECK(oracle::angle_between(p.orientation(), net) <= 1e-12);
    }
    const Pose p = forward_kinematics(chain, VectorXd::Zero(5));
    CHECK(p.position().isZero(0.0));
    CHECK(oracle::angle_between(p.orientation(), Quaterniond::Identity()) <= 1e-15);
}

TEST_CASE("planar two-link arm at (0, pi/2)") {
    const Pose p = forward_kinematics(planar_two_link(), Eigen::Vector2d(0.0, std::numbers::pi / 2));
    CHECK(p.position().x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.position().y() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(p.position().z()) <= 1e-12);
}

TEST_CASE("gen3 forward kinematics matches the step-by-step transform oracle") {
    const KinematicChain chain = load_chain(kGen3);
    std::mt19937_64 rng(14);
    std::vector<VectorXd> configs = {chain.home(), VectorXd::Zero(7)};
    for (int i = 0; i < 100; ++i) configs.push_back(oracle::random_config(rng, chain));
    for (const VectorXd& q : configs) {
        const Pose p = forward_kinematics(chain, q);
        const Eigen::Matrix4d m = oracle::fk_matrix(chain, q);
        CHECK((p.position() - m.topRightCorner<3, 1>()).norm() <= 1e-12);
        CHECK((p.rotation_matrix() - m.topLeftCorner<3, 3>()).norm() <= 1e-12);
    }
}

TEST_CASE("gen3 forward kinematics matches values frozen from an independent numpy evaluation") {
    const KinematicChain chain = load_chain(kGen3);
    struct Frozen {
        VectorXd q;
        Vector3d position;
        Quaterniond orientation;
    };
    VectorXd mixed(7);
    mixed << 0.3, -0.7, 1.1, -1.9, 0.4, 0.9, -2.2;
    const std::vector<Frozen> cases = {
        {VectorXd::Zero(7), {0.0, -0.02485009999999999, 1.3073849999999994}, {1.0, 0.0, 0.0, 0.0}},
        {chain.home(),
         {0.500002868895419, 0.0013499486678901361, 0.2999859236176048},
         {-2.5409550429554676e-06, 0.7071070054403649, 0.707106556923114, -2.6537414132643025e-06}},
        {mixed,
         {-0.40047104041142934, 0.5614967294224966, 0.4209542218172584},
         {0.6781576215434585, -0.6527619739172054, -0.31184509684635575, 0.12944760068506495}},
    };
    for (const Frozen& f : cases) {
        const Pose p = forward_kinematics(chain, f.q);
        CHECK((p.position() - f.position).norm() <= 1e-9);
        CHECK(oracle::angle_between(p.orientation(), f.orientation) <= 1e-9);
    }
}

TEST_CASE("forward kinematics is bitwise deterministic") {
    const KinematicChain chain = load_chain(kGen3);
    std::mt19937_64 rng(15);
    for (int i = 0; i < 50; ++i) {
        const VectorXd q = oracle::random_config(rng, chain);
        const Pose a = forward_kinematics(chain, q), b = forward_kinematics(chain, q);
        CHECK(a.position() == b.position());
        CHECK(a.orientation().coeffs() == b.orientation().coeffs());
    }
}

TEST_CASE("dimension mismatches are rejected") {
    const KinematicChain chain = load_chain(kGen3);
    CHECK_THROWS_AS(forward_kinematics(chain, VectorXd::Zero(6)), InvalidArgument);
    CHECK_THROWS_AS(jacobian(chain, VectorXd::Zero(8)), InvalidArgument);
    CHECK_THROWS_AS(dls_velocity_ik(Jacobian::Zero(6, 3), Twist{{1, 0, 0}, {0, 0, 0}}, -0.1), InvalidArgument);
}

TEST_CASE("chain validation") {
    Joint bad_axis{"a", Vector3d(1, 1, 0), Pose::identity()};
    CHECK_THROWS_AS(KinematicChain("c", {bad_axis}, Pose::identity()), InvalidArgument);
    Joint inverted{"a", Vector3d::UnitZ(), Pose::identity(), 1.0, -1.0};
    CHECK_THROWS_AS(KinematicChain("c", {inverted}, Pose::identity()), InvalidArgument);
    Joint ok{"a", Vector3d::UnitZ(), Pose::identity()};
    CHECK_THROWS_AS(KinematicChain("c", {ok}, Pose::identity(), VectorXd::Constant(1, 4.0)), InvalidArgument);
    CHECK(KinematicChain("c", {ok}, Pose::identity()).home().isZero());
}

TEST_CASE("single revolute joint about z with the tool at (1,0,0)") {
    const KinematicChain chain("one", {{"a", Vector3d::UnitZ(), Pose::identity()}}, Pose::from_translation({1, 0, 0}));
    const Jacobian j = jacobian(chain, VectorXd::Zero(1));
    Vector6d expected;
    expected << 0, 1, 0, 0, 0, 1;
    CHECK((j.col(0) - expected).norm() <= 1e-15);
}

TEST_CASE("degenerate chain has zero linear rows") {
    std::mt19937_64 rng(16);
    const KinematicChain chain = degenerate_chain(4);
    const Jacobian j = jacobian(chain, oracle::random_config(rng, chain));
    CHECK(j.topRows<3>().norm() <= 1e-15);
}

TEST_CASE("jacobian agrees with central finite differences on random chains") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> dof(1, 9);
    for (int i = 0; i < 100; ++i) {
        const KinematicChain chain = oracle::random_chain(rng, dof(rng));
        const VectorXd q = oracle::random_config(rng, chain);
        const Eigen::MatrixXd diff = jacobian(chain, q) - oracle::fd_jacobian(chain, q);
        CHECK(diff.cwiseAbs().maxCoeff() <= 1e-4);
    }
}

TEST_CASE("dls solves the damped normal equations") {
    SUBCASE("zero twist gives zero joint velocity") {
        std::mt19937_64 rng(18);
        for (double lambda : {0.0, 0.01, 1.0}) {
            const Eigen::MatrixXd j = random_matrix(rng, 6, 7);
            CHECK(dls_velocity_ik(j, Twist::zero(), lambda).isZero(0.0));
        }
    }
    SUBCASE("scalar closed form") {
        Jacobian j = Jacobian::Zero(6, 1);
        j(0, 0) = 2.0;
        const VectorXd qd = dls_velocity_ik(j, Twist{{1, 0, 0}, {0, 0, 0}}, 1.0);
        CHECK(qd(0) == doctest::Approx(0.4).epsilon(1e-15));
    }
    SUBCASE("stationarity and perturbation optimality on random 6x7 instances") {
        std::mt19937_64 rng(19);
        std::uniform_real_distribution<double> scale_exp(-4.0, 0.0);
        for (int i = 0; i < 50; ++i) {
            const Eigen::MatrixXd j = random_matrix(rng, 6, 7);
            const Vector6d v = random_matrix(rng, 6, 1);
            const double lambda = 0.05;
            const VectorXd qd = dls_velocity_ik(j, twist_of(v), lambda);
            CHECK(oracle::dls_stationarity(j, v, lambda, qd).norm() <= 1e-8);
            CHECK((qd - oracle::dls_svd(j, v, lambda)).norm() <= 1e-9);
            const double best = oracle::dls_objective(j, v, lambda, qd);
            int worse = 0;
            for (int k = 0; k < 10000; ++k) {
                const VectorXd delta = random_matrix(rng, 7, 1) * std::pow(10.0, scale_exp(rng));
                if (oracle::dls_objective(j, v, lambda, qd + delta) < best - 1e-12 * (1 + best)) ++worse;
            }
            CHECK(worse == 0);
        }
    }
    SUBCASE("more damping never increases the joint velocity norm") {
        std::mt19937_64 rng(20);
        for (int i = 0; i < 50; ++i) {
            const Eigen::MatrixXd j = random_matrix(rng, 6, 7);
            const Vector6d v = random_matrix(rng, 6, 1);
            double prev = std::numeric_limits<double>::infinity();
            for (double lambda : {0.01, 0.05, 0.2, 1.0}) {
                const double n = dls_velocity_ik(j, twist_of(v), lambda).norm();
                CHECK(n <= prev);
                prev = n;
            }
        }
    }
    SUBCASE("undamped solve is exact on a full-rank square jacobian") {
        std::mt19937_64 rng(21);
        for (int i = 0; i < 50; ++i) {
            const Eigen::MatrixXd j = random_matrix(rng, 6, 6);
            const Vector6d v = random_matrix(rng, 6, 1);
            const VectorXd qd = dls_velocity_ik(j, twist_of(v), 0.0);
            CHECK((j * qd - v).norm() <= 1e-8);
        }
    }
    SUBCASE("undamped solve on a rank-deficient jacobian throws") {
        Jacobian j = Jacobian::Zero(6, 7);
        j(0, 0) = 1.0;
        CHECK_THROWS_AS(dls_velocity_ik(j, Twist{{1, 0, 0}, {0, 0, 0}}, 0.0), SingularityError);
    }
    SUBCASE("gen3 instance matches values frozen from a numpy SVD solve") {
        const KinematicChain chain = load_chain(kGen3);
        VectorXd q(7);
        q << 0.3, -0.7, 1.1, -1.9, 0.4, 0.9, -2.2;
        const Twist t{{0.03, -0.02, 0.05}, {0.1, -0.2, 0.05}};
        VectorXd at_001(7), at_01(7);
        at_001 << -0.046094043021573584, 0.15092085331082525, 0.11396612471839535, -0.030999067820564323,
            0.2550796751024583, -0.03837888224301483, 0.1058874058272294;
        at_01 << -0.04001885326689828, 0.12346024759542495, 0.10645114236158963, -0.02490307778052251,
            0.2279174430401209, -0.026281415994752148, 0.10744802344264663;
        CHECK((dls_velocity_ik(jacobian(chain, q), t, 0.01) - at_001).norm() <= 1e-6);
        CHECK((dls_velocity_ik(jacobian(chain, q), t, 0.1) - at_01).norm() <= 1e-6);
    }
}

TEST_CASE("pose error examples") {
    const Pose a(Vector3d(0.1, 0.2, 0.3), Quaterniond(Eigen::AngleAxisd(0.4, Vector3d::UnitY())));
    const PoseError same = pose_error(a, a);
    CHECK(same.position.isZero(0.0));
    CHECK(same.rotation.norm() <= 1e-15);

    const Pose shifted(a.position() + Vector3d(0.3, 0, 0), a.orientation());
    const PoseError e1 = pose_error(a, shifted);
    CHECK((e1.position - Vector3d(0.3, 0, 0)).norm() <= 1e-15);
    CHECK(e1.rotation.norm() <= 1e-15);

    const Pose turned = Pose::from_rotation(Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2, Vector3d::UnitZ())));
    const PoseError e2 = pose_error(Pose::identity(), turned);
    CHECK((e2.rotation - Vector3d(0, 0, std::numbers::pi / 2)).norm() <= 1e-15);
}

TEST_CASE("pose error is antisymmetric away from the half turn") {
    std::mt19937_64 rng(22);
    int tested = 0;
    while (tested < 1000) {
        const Pose a = oracle::random_pose(rng), b = oracle::random_pose(rng);
        if (oracle::angle_between(a.orientation(), b.orientation()) >= std::numbers::pi - 0.1) continue;
        ++tested;
        const PoseError ab = pose_error(a, b), ba = pose_error(b, a);
        CHECK((ab.position + ba.position).norm() <= 1e-15);
        CHECK((ab.rotation + ba.rotation).norm() <= 1e-9);
    }
}

TEST_CASE("rotation log") {
    SUBCASE("agrees with the angle-axis oracle and round-trips through exp") {
        std::mt19937_64 rng(23);
        for (int i = 0; i < 1000; ++i) {
            const Quaterniond q = oracle::random_quaternion(rng);
            const Vector3d r = rotation_log(q);
            CHECK(r.norm() <= std::numbers::pi + 1e-12);
            CHECK(oracle::angle_between(rotation_exp(r), q) <= 1e-12);
            const Vector3d ref = oracle::so3_log(q.toRotationMatrix());
            if (ref.norm() < std::numbers::pi - 1e-3) CHECK((r - ref).norm() <= 1e-9);
        }
    }
    SUBCASE("continuous through the identity") {
        for (double angle : {1e-3, 1e-8, 1e-13, 0.0, -1e-13, -1e-8}) {
            const Vector3d axis = Vector3d(1, -2, 0.5).normalized();
            const Vector3d r = rotation_log(Quaterniond(Eigen::AngleAxisd(angle, axis)));
            CHECK((r - angle * axis).norm() <= 1e-15 + 1e-12 * std::abs(angle));
        }
    }
    SUBCASE("half turns take the lexicographically larger axis") {
        const double pi = std::numbers::pi;
        for (const Vector3d& axis : {Vector3d(1, 0, 0), Vector3d(-1, 0, 0), Vector3d(0, -1, 0),
                                     Vector3d(0, 0.6, -0.8), Vector3d(-0.6, 0, 0.8)}) {
            const Quaterniond q(0.0, axis.x(), axis.y(), axis.z());
            const Vector3d r = rotation_log(q);
            const Vector3d expected = (axis.x() < 0 || (axis.x() == 0 && (axis.y() < 0 || (axis.y() == 0 && axis.z() < 0))))
                                          ? Vector3d(-pi * axis)
                                          : Vector3d(pi * axis);
            CHECK((r - expected).norm() <= 1e-12);
            // The negated quaternion is the same rotation and must give the same vector.
            CHECK((rotation_log(Quaterniond(-q.coeffs())) - expected).norm() <= 1e-12);
        }
    }
}

TEST_CASE("chain config round trip and rejection of missing fields") {
    const KinematicChain chain = load_chain(kGen3);
    CHECK(chain.dof() == 7);
    const KinematicChain again = chain_from_json(chain_to_json(chain));
    std::mt19937_64 rng(24);
    for (int i = 0; i < 20; ++i) {
        const VectorXd q = oracle::random_config(rng, chain);
        CHECK((forward_kinematics(chain, q).position() - forward_kinematics(again, q).position()).norm() <= 1e-15);
    }
    CHECK(again.home() == chain.home());

    for (const char* field : {"name", "joints", "tool"}) {
        nlohmann::json doc = chain_to_json(chain);
        doc.erase(field);
        CHECK_THROWS_AS(chain_from_json(doc), FieldError);
    }
    nlohmann::json doc = chain_to_json(chain);
    doc["joints"][2]["limits"].erase("velocity");
    try {
        chain_from_json(doc);
        FAIL("expected a FieldError");
    } catch (const FieldError& e) {
        CHECK(e.field() == "joints[2].limits.velocity");
    }
}

} // TEST_SUITE
