#include "support/keccak_oracle.hpp"

#include "ledgersim/core/model.hpp"
#include "ledgersim/sim/simulation.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace ledgersim;

namespace {

template <class Fixed>
Fixed random_fixed(std::mt19937_64& rng) {
    Fixed f;
    for (auto& b : f.bytes) b = static_cast<std::uint8_t>(rng());
    return f;
}

Amount random_amount(std::mt19937_64& rng) {
    switch (rng() % 3) {
    case 0: return Amount(rng() % 1000);
    case 1: return Amount(rng());
    default: return Amount((uint128{rng()} << 64) | rng());
    }
}

TxPayload random_payload(std::mt19937_64& rng) {
    auto addr = random_fixed<Address>(rng);
    switch (rng() % 6) {
    case 0: return payload::Deploy{};
    case 1: return payload::AddRecipient{addr};
    case 2: return payload::RemoveRecipient{addr};
    case 3: return payload::RegisterBankAccount{addr, std::string(rng() % 12, static_cast<char>('a' + rng() % 26))};
    case 4: return payload::AddFunds{random_amount(rng)};
    default: return payload::SendAllowance{addr, random_amount(rng)};
    }
}

Transaction random_tx(std::mt19937_64& rng) {
    Transaction tx;
    tx.sender = random_fixed<Address>(rng);
    tx.nonce = rng() % 5;
    tx.payload = random_payload(rng);
    tx.gas_limit = rng() % 3 == 0 ? rng() : gas_cost(tx.payload);
    tx.gas_price = rng() % 4 == 0 ? rng() % 10 : 0;
    tx.signature = Bytes(rng() % 40, static_cast<std::uint8_t>(rng()));
    return tx;
}

Block random_block(std::mt19937_64& rng) {
    Block b;
    b.height = rng() % 100;
    b.round = rng() % 4;
    b.parent_hash = random_fixed<Hash256>(rng);
    b.proposer = random_fixed<Address>(rng);
    for (auto n = rng() % 4; n > 0; --n) b.txs.push_back(random_tx(rng));
    b.state_root = random_fixed<Hash256>(rng);
    for (auto n = rng() % 4; n > 0; --n) b.commit_seals.push_back({random_fixed<Address>(rng), Bytes(32, 7)});
    return b;
}

} // namespace

TEST(Hex, RendersLowercaseWithPrefix) {
    Bytes b{0x00, 0xab, 0xff};
    EXPECT_EQ(to_hex(b), "0x00abff");
    EXPECT_EQ(from_hex("0x00ABff"), b);
    EXPECT_THROW(from_hex("0xabc"), HexError);
    EXPECT_THROW(from_hex("zz"), HexError);
    EXPECT_THROW(Address::from_hex("0x00"), std::invalid_argument);
}

TEST(Amount, ZeroSerializesToSixteenZeroBytes) {
    EXPECT_EQ(serialize(Amount{0}), Bytes(16, 0));
}

TEST(Amount, CheckedArithmeticFailsExactlyOutsideTheDomain) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        auto a = random_amount(rng), b = random_amount(rng);
        auto sum = a.checked_add(b);
        // Overflow iff the true sum needs bit 128.
        bool overflows = a.value() > Amount::max().value() - b.value();
        EXPECT_EQ(sum.has_value(), !overflows);
        if (sum) {
            EXPECT_EQ(sum->value(), a.value() + b.value());
        }
        auto diff = a.checked_sub(b);
        EXPECT_EQ(diff.has_value(), a >= b);
        if (diff) {
            EXPECT_EQ(diff->value() + b.value(), a.value());
        }
    }
    EXPECT_FALSE(Amount::max().checked_add(Amount(1)));
    EXPECT_FALSE(Amount(0).checked_sub(Amount(1)));
}

TEST(Amount, DecimalParseRoundTrips) {
    EXPECT_EQ(Amount::parse("0").value(), 0u);
    EXPECT_EQ(Amount::parse("1000").to_string(), "1000");
    EXPECT_EQ(Amount::max().to_string(), "340282366920938463463374607431768211455");
    EXPECT_EQ(Amount::parse("340282366920938463463374607431768211455"), Amount::max());
    EXPECT_THROW(Amount::parse("340282366920938463463374607431768211456"), std::invalid_argument);
    EXPECT_THROW(Amount::parse(""), std::invalid_argument);
    EXPECT_THROW(Amount::parse("-1"), std::invalid_argument);
    EXPECT_THROW(Amount::parse("1e3"), std::invalid_argument);
}

TEST(Codec, IntegersAreBigEndianFixedWidth) {
    Writer w;
    w.u32(0x01020304);
    w.u64(5);
    w.text("hi");
    EXPECT_EQ(w.data(), (Bytes{1, 2, 3, 4, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 2, 'h', 'i'}));
}

TEST(Codec, TransactionsRoundTripAndAreInjective) {
    std::mt19937_64 rng(1);
    std::map<Bytes, Transaction> seen;
    for (int i = 0; i < 1000; ++i) {
        auto tx = random_tx(rng);
        auto bytes = serialize(tx);
        EXPECT_EQ(deserialize<Transaction>(bytes), tx);
        auto [it, fresh] = seen.try_emplace(bytes, tx);
        if (!fresh) {
            EXPECT_EQ(it->second, tx);
        }
    }
}

TEST(Codec, BlocksAndReceiptsRoundTrip) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 300; ++i) {
        auto b = random_block(rng);
        EXPECT_EQ(deserialize<Block>(serialize(b)), b);
        Receipt ok = Receipt::success(random_fixed<Hash256>(rng), 21000,
                                      {event::FundsAdded{random_amount(rng)},
                                       event::AllowanceSent{random_fixed<Address>(rng), random_amount(rng)},
                                       event::BankAccountRegistered{random_fixed<Address>(rng),
                                                                    random_fixed<Hash256>(rng)}});
        EXPECT_EQ(deserialize<Receipt>(serialize(ok)), ok);
        Receipt bad = Receipt::failure(random_fixed<Hash256>(rng), TxError::Unauthorized, 21000);
        EXPECT_EQ(deserialize<Receipt>(serialize(bad)), bad);
    }
}

TEST(Codec, StrictDecodingRejectsTrailingAndTruncatedInput) {
    std::mt19937_64 rng(3);
    auto bytes = serialize(random_tx(rng));
    auto longer = bytes;
    longer.push_back(0);
    EXPECT_THROW(deserialize<Transaction>(longer), DecodeError);
    auto shorter = bytes;
    shorter.pop_back();
    EXPECT_THROW(deserialize<Transaction>(shorter), DecodeError);
    Bytes bad_tag = serialize(Transaction{});
    bad_tag[20 + 8] = 42; // payload tag follows sender and nonce
    EXPECT_THROW(deserialize<Transaction>(bad_tag), DecodeError);
}

TEST(Hashes, TxHashIgnoresTheSignature) {
    std::mt19937_64 rng(4);
    auto tx = random_tx(rng);
    auto h = tx_hash(tx);
    tx.signature = Bytes(32, 0x55);
    EXPECT_EQ(tx_hash(tx), h);
    tx.nonce += 1;
    EXPECT_NE(tx_hash(tx), h);
}

TEST(Hashes, BlockHashIgnoresSealsButNotContent) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto b = random_block(rng);
        if (b.txs.empty()) b.txs.push_back(random_tx(rng));
        auto h = block_hash(b);
        b.commit_seals.push_back({random_fixed<Address>(rng), Bytes(32, 1)});
        EXPECT_EQ(block_hash(b), h);

        // Flip one random bit of one transaction's signed content.
        auto flipped = b;
        auto& tx = flipped.txs[rng() % flipped.txs.size()];
        auto bit = rng() % 160;
        tx.sender.bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        EXPECT_NE(block_hash(flipped), h);
    }
}

TEST(Hashes, GenesisHashMatchesIndependentOracle) {
    auto g = sim::make_genesis();
    EXPECT_EQ(g.height, 0u);
    EXPECT_TRUE(g.parent_hash.is_zero());
    EXPECT_TRUE(g.proposer.is_zero());
    EXPECT_TRUE(g.commit_seals.empty());
    Writer w;
    encode_unsealed(w, g);
    EXPECT_EQ(block_hash(g).hex(), oracle::hex(oracle::keccak256(w.data())));
}
