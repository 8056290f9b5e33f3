#include <gtest/gtest.h>

#include "kinit/kmeans.hpp"

namespace {

// Every Lloyd run in the process feeds the trace audit; none may let the SSE rise.
class TraceAuditEnvironment : public ::testing::Environment {
public:
    void TearDown() override {
        const auto& audit = kinit::trace_audit();
        EXPECT_EQ(audit.violations.load(), 0u) << "SSE rose between iterations in " << audit.violations.load()
                                               << " of " << audit.runs.load() << " runs";
    }
};

const auto* const registered = ::testing::AddGlobalTestEnvironment(new TraceAuditEnvironment);

}  // namespace
