import hypothesis.strategies as st
from hypothesis import settings

from currencynet.ledger import Coin, CurrencyCommunity, CurrencyNetwork

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


def make_network(spec):
    """Build a network from {index: (members, {agent: coin_count})}."""
    communities = []
    holder = {}
    for index in sorted(spec):
        members, counts = spec[index]
        serial = 0
        coins = set()
        for agent in sorted(counts):
            for _ in range(counts[agent]):
                coin = Coin(index, serial)
                serial += 1
                coins.add(coin)
                holder[coin] = agent
        communities.append(
            CurrencyCommunity(index, frozenset(members), frozenset(coins))
        )
    return CurrencyNetwork(tuple(communities), holder)


AGENT_POOL = ["a", "b", "c", "d", "e", "f", "g"]


@st.composite
def networks(draw, max_k=3, max_agents=6, max_coins=5):
    k = draw(st.integers(1, max_k))
    agents = draw(
        st.lists(st.sampled_from(AGENT_POOL[:max_agents]), min_size=1, unique=True)
    )
    spec = {}
    for i in range(1, k + 1):
        members = draw(
            st.lists(st.sampled_from(agents), min_size=1, unique=True)
        )
        counts = {}
        for agent in members:
            n = draw(st.integers(0, max_coins))
            if n:
                counts[agent] = n
        spec[i] = (members, counts)
    return make_network(spec)


@st.composite
def networks_with_payment(draw):
    """A network plus one valid (coin, payer, payee) triple."""
    network = draw(networks())
    coined = [i for i in network.currencies if network.coin_count(i) > 0]
    if not coined:
        spec_member = sorted(network.members(1))[0]
        coin = Coin(1, 0)
        network = network.with_coins({coin: spec_member})
        coined = [1]
    i = draw(st.sampled_from(coined))
    coin = draw(st.sampled_from(sorted(network.community(i).coins)))
    payer = network.holder[coin]
    payee = draw(st.sampled_from(sorted(network.members(i))))
    return network, coin, payer, payee
